#pragma once

// Subcommand pipeline: synth -> train-emos -> train-raft -> replay -> verify,
// handing off through files in the data, model and report directories.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace traject::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMissingArtifact = 3;
inline constexpr int kExitData = 4;

struct RunConfig {
  std::string subcommand;
  std::filesystem::path data_dir{"data"};
  std::filesystem::path model_dir{"model"};
  std::filesystem::path report_dir{"reports"};
  std::uint64_t seed{7};
  std::vector<int> init_hours{3, 9, 15, 21};
  std::string policy{"raft_full"};
  std::optional<int> until_lead;
  std::optional<std::string> figure;
  std::optional<std::string> slice;
  int workers{1};
  int days{550};
  int stations{10};
  int training_days{365};
  int spinup_days{40};
};

/// Artifact file names shared by the subcommands.
namespace files {
inline constexpr const char* kEmosParams = "emos_params.json";
inline constexpr const char* kRaftModel = "raft_model.json";
inline constexpr const char* kLedger = "ledger.csv";
inline constexpr const char* kReplayLog = "replay_log.txt";
}  // namespace files

void cmd_synth(const RunConfig& config, std::ostream& out);
void cmd_train_emos(const RunConfig& config, std::ostream& out);
void cmd_train_raft(const RunConfig& config, std::ostream& out);
void cmd_replay(const RunConfig& config, std::ostream& out);
void cmd_verify(const RunConfig& config, std::ostream& out);

/// Dispatches to the subcommand and maps errors to exit codes.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);
/// Parses arguments, then runs. `argv[0]` is the program name.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace traject::cli
