#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "traject/error.hpp"
#include "traject/ingest.hpp"
#include "traject/stats.hpp"

using namespace traject;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("configuration is validated") {
    auto c = testing::small_config();
    c.error_ar1_coeff = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = testing::small_config();
    c.training_days = c.n_days;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = testing::small_config();
    CHECK(c.training_range().first == c.start + std::chrono::days{c.spinup_days});
    CHECK(c.test_range().first == c.training_range().last + std::chrono::days{1});
    CHECK(c.test_range().last == c.last_day());
  }

  TEST_CASE("generator is deterministic in the seed") {
    const auto a = ingest::generate_synthetic(testing::small_config(3));
    const auto b = ingest::generate_synthetic(testing::small_config(3));
    const auto c = ingest::generate_synthetic(testing::small_config(4));
    CHECK(a.data == b.data);
    CHECK_FALSE(a.data == c.data);
    CHECK(a.data.forecast_count() == 2u * 110u * 4u);
    CHECK_NOTHROW(a.manifest.validate(a.data));
  }

  TEST_CASE("dataset files round-trip exactly") {
    const auto s = ingest::generate_synthetic(testing::small_config());
    const auto dir = testing::scratch_dir("ingest_roundtrip");
    const auto paths = ingest::write_dataset(s.data, s.manifest, ingest::DatasetPaths::in(dir));
    const auto loaded = ingest::read_dataset(paths);
    CHECK(loaded.data == s.data);
    CHECK(loaded.manifest.cycles == s.manifest.cycles);
    CHECK(loaded.manifest.training_range == s.manifest.training_range);
    CHECK(loaded.manifest.stations == s.manifest.stations);
    REQUIRE(loaded.manifest.planted_truth.has_value());
    CHECK(loaded.manifest.planted_truth->config.error_ar1_coeff == s.truth.config.error_ar1_coeff);

    const auto dir2 = testing::scratch_dir("ingest_roundtrip2");
    const auto paths2 = ingest::write_dataset(loaded.data, loaded.manifest, ingest::DatasetPaths::in(dir2));
    CHECK(slurp(paths.forecasts) == slurp(paths2.forecasts));
    CHECK(slurp(paths.observations) == slurp(paths2.observations));
    CHECK(slurp(paths.manifest) == slurp(paths2.manifest));
  }

  TEST_CASE("CSV errors name the offending row") {
    const auto dir = testing::scratch_dir("ingest_errors");
    std::string header = "station,date,init_hour,lead";
    for (int m = 1; m <= kMembers; ++m) header += (m < 10 ? ",m0" : ",m") + std::to_string(m);
    std::string row = "S001,2014-01-01,3,1";
    for (int m = 0; m < kMembers; ++m) row += ",1.5";
    {
      std::ofstream out(dir / "f.csv");
      out << header << '\n' << row << '\n' << "S001,2014-01-01,3,x" << row.substr(row.find(",1.5")) << '\n';
    }
    Dataset d;
    try {
      ingest::read_forecasts_csv(dir / "f.csv", d);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    {
      std::ofstream out(dir / "g.csv");
      out << header << '\n' << row << '\n' << row << '\n';
    }
    Dataset d2;
    CHECK_THROWS_AS(ingest::read_forecasts_csv(dir / "g.csv", d2), DataError);
    {
      std::ofstream out(dir / "h.csv");
      out << "station,valid_time_iso8601,temp_c\nS001,2014-01-01T04:00:00Z,1\nS001,2014-01-01T03:00:00Z,2\n";
    }
    Dataset d3;
    CHECK_THROWS_AS(ingest::read_observations_csv(dir / "h.csv", d3), DataError);
  }

  TEST_CASE("member-mean errors follow the planted lead correlation") {
    auto c = testing::small_config(21);
    c.n_stations = 3;
    c.n_days = 400;
    c.training_days = 300;
    c.missing_obs_fraction = 0.0;
    const auto s = ingest::generate_synthetic(c);
    for (int k : {1, 3, 6}) {
      std::vector<double> e1;
      std::vector<double> e2;
      for (const auto& st : s.data.stations()) {
        if (st.site_type != SiteType::Inland) continue;
        for (const auto& [cycle, fc] : s.data.forecasts(st.id)) {
          const int l1 = 10;
          const int l2 = 10 + k;
          const auto y1 = s.data.observation(st.id, valid_time(cycle, LeadTime(l1)));
          const auto y2 = s.data.observation(st.id, valid_time(cycle, LeadTime(l2)));
          e1.push_back(*y1 - ensemble_stats(fc, LeadTime(l1)).mean);
          e2.push_back(*y2 - ensemble_stats(fc, LeadTime(l2)).mean);
        }
      }
      const double r = stats::pearson(e1, e2);
      CHECK(r == doctest::Approx(s.truth.lead_correlation(10, 10 + k)).epsilon(0.06));
    }
  }

  TEST_CASE("raw ensemble is underdispersed") {
    const auto s = ingest::generate_synthetic(testing::small_config(5));
    double se = 0.0;
    double spread = 0.0;
    int n = 0;
    for (const auto& st : s.data.stations()) {
      for (const auto& [cycle, fc] : s.data.forecasts(st.id)) {
        const auto es = ensemble_stats(fc, LeadTime(12));
        const auto y = s.data.observation(st.id, valid_time(cycle, LeadTime(12)));
        if (!y) continue;
        se += (*y - es.mean) * (*y - es.mean);
        spread += es.variance;
        ++n;
      }
    }
    CHECK(spread / n < 0.5 * se / n);
  }
}
