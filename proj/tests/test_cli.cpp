#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "traject/cli.hpp"
#include "traject/serialize.hpp"

using namespace traject;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::vector<const char*> argv{"traject"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> dirs(const fs::path& root) {
  return {"--data-dir", (root / "data").string(), "--model-dir", (root / "model").string(), "--report-dir",
          (root / "reports").string(), "--init-hours", "3,9"};
}

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("argument and configuration errors exit with 2") {
    CHECK(run({}).code == cli::kExitConfig);
    CHECK(run({"bogus"}).code == cli::kExitConfig);
    CHECK(run({"synth", "--days", "abc"}).code == cli::kExitConfig);
    const auto root = testing::scratch_dir("cli_config");
    CHECK(run(with({"replay", "--policy", "raft_until"}, dirs(root))).code == cli::kExitConfig);
    CHECK(run(with({"replay", "--policy", "nonsense"}, dirs(root))).code == cli::kExitConfig);
    CHECK(run({"synth", "--init-hours", "3,4", "--data-dir", (root / "d").string()}).code == cli::kExitConfig);
    CHECK(run({"synth", "--days", "10", "--data-dir", (root / "d").string()}).code == cli::kExitConfig);
    CHECK_FALSE(fs::exists(root / "d"));
  }

  TEST_CASE("missing artifacts exit with 3 and name the producer") {
    const auto root = testing::scratch_dir("cli_missing");
    const auto r = run(with({"train-emos"}, dirs(root)));
    CHECK(r.code == cli::kExitMissingArtifact);
    CHECK(r.err.find("synth") != std::string::npos);
  }

  TEST_CASE("malformed data exits with 4") {
    const auto root = testing::scratch_dir("cli_data");
    REQUIRE(run(with({"synth", "--days", "75", "--stations", "1", "--training-days", "20"}, dirs(root))).code == 0);
    {
      std::ofstream out(root / "data" / "observations.csv", std::ios::app);
      out << "S001,not-a-time,1.0\n";
    }
    const auto r = run(with({"train-emos"}, dirs(root)));
    CHECK(r.code == cli::kExitData);
    CHECK(r.err.find("row") != std::string::npos);
  }

  TEST_CASE("pipeline runs end to end and reruns reproduce every file") {
    const auto root = testing::scratch_dir("cli_pipeline");
    const auto d = dirs(root);
    REQUIRE(run(with({"synth", "--days", "75", "--stations", "2", "--training-days", "20"}, d)).code == 0);
    CHECK(fs::exists(root / "data" / "synth.config.json"));
    REQUIRE(run(with({"train-emos", "--workers", "2"}, d)).code == 0);
    const auto emos_first = slurp(root / "model" / cli::files::kEmosParams);
    REQUIRE(run(with({"train-emos"}, d)).code == 0);
    CHECK(slurp(root / "model" / cli::files::kEmosParams) == emos_first);
    REQUIRE(run(with({"train-raft"}, d)).code == 0);
    REQUIRE(run(with({"replay", "--policy", "emos_only"}, d)).code == 0);
    REQUIRE(run(with({"verify"}, d)).code == 0);
    const auto report = read_json_file(root / "reports" / "report.json");
    double rmse_emos = -1.0;
    double rmse_raft = -2.0;
    for (const auto& r : report) {
      if (r["slice"] != "all") continue;
      if (r["metric"] == "rmse_emos") rmse_emos = r["value"].get<double>();
      if (r["metric"] == "rmse_raft") rmse_raft = r["value"].get<double>();
    }
    CHECK(rmse_emos == rmse_raft);

    REQUIRE(run(with({"replay"}, d)).code == 0);
    const auto ledger = slurp(root / "reports" / cli::files::kLedger);
    CHECK(ledger.find(",RAFT,") != std::string::npos);
    REQUIRE(run(with({"replay", "--workers", "3"}, d)).code == 0);
    CHECK(slurp(root / "reports" / cli::files::kLedger) == ledger);
    for (const char* fig : {"table1", "fig8", "fig11"}) {
      const auto r = run(with({"verify", "--figure", fig}, d));
      CHECK_MESSAGE(r.code == 0, r.err);
      CHECK(fs::exists(root / "reports" / fig / "report.json"));
    }
    const auto echo = read_json_file(root / "reports" / "replay.config.json");
    CHECK(echo["workers"] == 3);
    CHECK(run(with({"verify", "--figure", "fig99"}, d)).code == cli::kExitConfig);
    CHECK(run(with({"verify", "--slice", "site_type=mountain"}, d)).code == cli::kExitData);
  }
}
