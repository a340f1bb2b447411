#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "traject/error.hpp"
#include "traject/serialize.hpp"

using namespace traject;

TEST_SUITE("serialize") {
  TEST_CASE("synthetic config round-trips") {
    auto c = testing::small_config(42);
    c.forecast_bias[5] = -0.25;
    c.cross_run_share = 0.3;
    const auto back = synthetic_config_from_json(to_json(c));
    CHECK(to_json(back).dump() == to_json(c).dump());
    CHECK(back.forecast_bias[5] == -0.25);
    CHECK(back.start == c.start);
  }

  TEST_CASE("EMOS model file round-trips") {
    const auto& p = testing::small_pipeline();
    const auto dir = testing::scratch_dir("serialize_emos");
    write_emos_model(dir / "emos.json", p.emos_model);
    const auto back = read_emos_model(dir / "emos.json");
    REQUIRE(back.size() == p.emos_model.size());
    for (const auto& [cell, days] : p.emos_model.cells()) {
      for (const auto& [d, params] : days) {
        const auto* q = back.find(cell, d);
        REQUIRE(q != nullptr);
        CHECK(to_json(*q).dump() == to_json(params).dump());
      }
    }
    CHECK_THROWS_AS(read_emos_model(dir / "none.json"), MissingArtifactError);
    // the file is also a plain JSON array
    CHECK(read_json_file(dir / "emos.json").size() == p.emos_model.size());
  }

  TEST_CASE("RAFT model round-trips") {
    const auto& p = testing::small_pipeline();
    const auto j = to_json(p.raft);
    const auto back = raft_model_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
    const auto* plan = back.plan({"S001", 3}, 25);
    REQUIRE(plan != nullptr);
    const auto* orig = p.raft.plan({"S001", 3}, 25);
    CHECK(plan->period == orig->period);
    CHECK(plan->rule == orig->rule);
    CHECK(plan->links.size() == orig->links.size());
  }

  TEST_CASE("manifest round-trips and rejects malformed input") {
    const auto& p = testing::small_pipeline();
    const auto back = manifest_from_json(to_json(p.synthetic.manifest));
    CHECK(back.cycles == p.synthetic.manifest.cycles);
    CHECK(back.stations == p.synthetic.manifest.stations);
    const auto dir = testing::scratch_dir("serialize_bad");
    {
      std::ofstream out(dir / "bad.json");
      out << "{ not json";
    }
    CHECK_THROWS_AS(read_json_file(dir / "bad.json"), DataError);
    CHECK_THROWS_AS(read_json_file(dir / "missing.json"), DataError);
  }

  TEST_CASE("reports carry panel, slice and interval") {
    verify::VerificationReport r{{verify::MetricKind::Crps, verify::System::Raft},
                                 verify::ScoreSlice::lead_band(1, 12),
                                 10,
                                 0.5,
                                 verify::BootstrapInterval{0.4, 0.5, 0.6},
                                 "a"};
    const std::vector<verify::VerificationReport> reports{r};
    const auto j = to_json(reports);
    CHECK(j[0]["panel"] == "a");
    CHECK(j[0]["metric"] == "crps_raft");
    CHECK(j[0]["slice"] == "lead=1-12");
    CHECK(j[0]["ci"]["low"] == 0.4);
  }
}
