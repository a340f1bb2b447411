#pragma once

// Replay of the operational cycle: EMOS issued at init, RAFT stepped
// hourly, and every in-force forecast recorded for later snapshots.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "traject/core.hpp"
#include "traject/emos.hpp"
#include "traject/raft.hpp"
#include "traject/verify.hpp"

namespace traject::cycle {

enum class PolicyMode : std::uint8_t { EmosOnly, RaftFull, RaftUntil };
enum class RunSelection : std::uint8_t { NewestRun, BestByTimeOfDay };

struct CyclePolicy {
  PolicyMode mode{PolicyMode::RaftFull};
  /// Last wall-clock hour (since init) at which RAFT may adjust; RaftUntil only.
  int until_hour{kMaxLead - 1};
  RunSelection run_selection{RunSelection::NewestRun};

  static CyclePolicy emos_only();
  static CyclePolicy raft_full();
  static CyclePolicy raft_until(int hour);

  bool adjusts_at(int hour) const;
  /// "emos_only", "raft_full" or "raft_until:<hour>"
  std::string describe() const;
  static CyclePolicy parse(std::string_view text);
};

enum class Source : std::uint8_t { Emos, Raft };

/// One RAFT (re)adjustment of a lead.
struct LedgerEntry {
  int hour{};  ///< wall-clock hours since init
  int predictor_lead{};
  double mu_hat{};

  bool operator==(const LedgerEntry&) const = default;
};

/// The forecast in force for a lead at a given hour.
struct InForce {
  Source source{Source::Emos};
  std::optional<int> predictor_lead;
  double mu_hat{};
  double sigma2{};
};

/// Everything issued for one run at one station.
struct CycleRecord {
  std::string station;
  CycleTime cycle;
  emos::EmosTrajectory emos{};
  std::array<std::optional<double>, kMaxLead> obs{};
  /// RAFT adjustments per lead in hour order; at most one per hour.
  std::array<std::vector<LedgerEntry>, kMaxLead> adjustments{};

  CycleRecord(std::string station_id, CycleTime run) : station(std::move(station_id)), cycle(run) {}

  /// The latest adjustment made at or before `hour`, else the EMOS forecast.
  std::optional<InForce> in_force(int lead, int hour) const;
  /// Forecast in force just before the lead verifies (hour lead - 1).
  std::optional<InForce> final_forecast(int lead) const { return in_force(lead, lead - 1); }

  bool operator==(const CycleRecord&) const = default;
};

class CycleLedger {
 public:
  /// Records must arrive in (station, cycle) order and never repeat.
  void append(CycleRecord record);
  const CycleRecord* find(const std::string& station, const CycleTime& cycle) const;
  const std::vector<CycleRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  bool operator==(const CycleLedger&) const = default;

 private:
  std::vector<CycleRecord> records_;
};

struct ReplayLog {
  std::vector<std::string> messages;
};

/// Replays every run initialised in [first, last]. Runs without EMOS
/// forecasts are skipped and runs without a RAFT plan stay EMOS-only; both
/// are noted in `log`. Parallel over stations; the ledger does not depend on
/// the worker count.
CycleLedger replay(const Dataset& data, const emos::EmosForecastSet& emos, const raft::RaftModel& model,
                   const CyclePolicy& policy, Date first, Date last, int workers = 1, ReplayLog* log = nullptr,
                   std::span<const int> init_hours = kInitHours);

/// Long format: one EMOS row per lead at wall-clock hour 0, then one RAFT
/// row per adjustment.
void write_ledger_csv(const std::filesystem::path& path, const CycleLedger& ledger);
CycleLedger read_ledger_csv(const std::filesystem::path& path);

/// Which in-force value to verify: the last one before verification, or
/// the state frozen at a wall-clock hour (earlier leads still use their final).
struct Snapshot {
  std::optional<int> hour;

  static Snapshot final_forecasts() { return {}; }
  static Snapshot at_hour(int h) { return {h}; }
  int hour_for(int lead) const { return hour ? std::min(*hour, lead - 1) : lead - 1; }
};

/// Verification cases for every (run, lead) with an observation.
std::vector<verify::VerificationCase> cases_from_ledger(const CycleLedger& ledger, const Dataset& data,
                                                        const Snapshot& snapshot = Snapshot::final_forecasts());

/// Lead of the most recent run with this init hour valid at hour-of-day `tod`.
int most_recent_lead(int init_hour, int tod);

struct RunScore {
  int init_hour{};
  int hour_of_day{};
  int lead{};
  std::size_t n{};
  verify::BootstrapInterval rmse;
};

struct RunComparison {
  std::vector<RunScore> scores;
  /// Init hours ranked best-first per hour of day.
  std::array<std::vector<int>, 24> ranking{};

  const RunScore* find(int init_hour, int tod) const;
  /// Run to publish at each hour of day under a selection rule.
  std::array<int, 24> selection(RunSelection rule) const;
};

/// RMSE of each run's final forecast by time of day with bootstrap CIs.
RunComparison run_comparison(const CycleLedger& ledger, const verify::BootstrapOptions& bootstrap = {});
RunComparison run_comparison(std::span<const verify::VerificationCase> cases,
                             const verify::BootstrapOptions& bootstrap = {});

struct PairedDifference {
  int hour_of_day{};
  int init_a{};
  int init_b{};
  std::size_t n{};
  /// RMSE(a) - RMSE(b) over cases matched on station and valid time.
  verify::BootstrapInterval difference;
};

PairedDifference compare_runs(std::span<const verify::VerificationCase> cases, int hour_of_day, int init_a,
                              int init_b, const verify::BootstrapOptions& bootstrap = {});

struct TransitionDifference {
  int hours_after_init{};
  std::size_t n{};
  /// RMSE(new run) - RMSE(run initialised 6 hours earlier), pooled over all
  /// four init hours; positive when the older run is better.
  verify::BootstrapInterval difference;
};

TransitionDifference transition_difference(std::span<const verify::VerificationCase> cases, int hours_after_init,
                                           const verify::BootstrapOptions& bootstrap = {});

}  // namespace traject::cycle
