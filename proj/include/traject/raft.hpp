#pragma once

// Rapid adjustment of issued forecast trajectories: lead-to-lead error
// regressions, adjustment-period selection, and the hourly adjuster.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "traject/core.hpp"
#include "traject/emos.hpp"

namespace traject::raft {

/// Earliest predictor offset searched (l - 23) and the longest period kept.
inline constexpr int kMaxPredictorOffset = 23;
inline constexpr int kMinPredictorOffset = 2;
inline constexpr int kMaxPeriod = 22;
/// Hours between an observation and the adjustment that uses it.
inline constexpr int kProcessingDelay = 1;

struct CellKey {
  std::string station;
  int init_hour{};

  auto operator<=>(const CellKey&) const = default;
};

/// y - mu against the EMOS mean; empty when the observation is missing.
std::optional<double> forecast_error(std::optional<double> observation, double emos_mean);

/// EMOS errors of every run of one (station, init hour) cell, keyed by init date.
class TrainingErrors {
 public:
  using Row = std::array<std::optional<double>, kMaxLead>;

  TrainingErrors() = default;
  TrainingErrors(std::string station, int init_hour) : key_{std::move(station), init_hour} {}

  const CellKey& key() const noexcept { return key_; }
  void set(Date date, int lead, std::optional<double> error);
  /// Error of the run initialised on `date` at `lead`; leads <= 0 refer to
  /// the run initialised a day earlier at lead + 24.
  std::optional<double> at(Date date, int lead) const;
  const std::map<Date, Row>& rows() const noexcept { return rows_; }
  /// Runs before this date only supply previous-day predictors.
  void set_first_target(Date date) { first_target_ = date; }
  bool is_target(Date date) const { return !first_target_ || *first_target_ <= date; }

 private:
  CellKey key_;
  std::map<Date, Row> rows_;
  std::optional<Date> first_target_;
};

/// Errors for every run of the cell initialised within [first, last], plus
/// the day before `first` so that previous-day predictors are available.
TrainingErrors collect_training_errors(const Dataset& data, const emos::EmosForecastSet& emos,
                                       const CellKey& cell, Date first, Date last);

struct CorrelationEntry {
  double r{};
  double p_value{};
  int n{};
};

struct CorrelationMatrix {
  std::array<std::array<std::optional<CorrelationEntry>, kMaxLead>, kMaxLead> entries{};

  const std::optional<CorrelationEntry>& at(int l1, int l2) const {
    return entries[static_cast<std::size_t>(l1 - 1)][static_cast<std::size_t>(l2 - 1)];
  }
  /// Copy keeping only entries with p < 1 - level.
  CorrelationMatrix masked(double level) const;
};

/// Pearson correlations of the within-run errors between every pair of
/// leads. Entries with fewer than 3 complete pairs are left empty.
CorrelationMatrix error_correlation_matrix(const TrainingErrors& errors);

enum class PredictorSource : std::uint8_t { CurrentRun, PreviousDayRun };

struct RaftLink {
  double alpha{};
  double beta{};
  int target_lead{};
  /// May be <= 0: then the predictor is the previous day's run at lead + 24.
  int predictor_lead{};
  double p_value{1.0};
  double residual_sd{};
  int n_train{};
  /// False when there were too few pairs or the predictor had no variance.
  bool usable{false};

  PredictorSource source() const noexcept {
    return predictor_lead <= 0 ? PredictorSource::PreviousDayRun : PredictorSource::CurrentRun;
  }
  /// Lead within the run that supplies the predictor error.
  int source_lead() const noexcept { return predictor_lead <= 0 ? predictor_lead + 24 : predictor_lead; }
  /// Two-sided test of beta = 0 at `level` (0.90, 0.95, 0.99).
  bool significant(double level) const noexcept { return usable && p_value < 1.0 - level; }
  double predict(double observed_error) const noexcept { return alpha + beta * observed_error; }
};

/// Ordinary least squares of target on predictor with the t-test of beta = 0.
RaftLink fit_link(std::span<const double> predictor, std::span<const double> target, int target_lead,
                  int predictor_lead);
RaftLink fit_link(const TrainingErrors& errors, int target_lead, int predictor_lead);

enum class PeriodRule : std::uint8_t {
  Tier90,           ///< first non-significant predictor in [l-11, l-2] at 90%
  Tier95,           ///< ... in [l-19, l-12] at 95%
  Tier99,           ///< ... in [l-23, l-20] at 99%
  NeighbourAverage, ///< mean period of leads l-1 and l+1
  Maximum,          ///< fallback to the longest period
};

std::string_view to_string(PeriodRule rule);
PeriodRule parse_period_rule(std::string_view text);

/// Links for one cell: target lead -> predictor lead -> link.
using CellLinks = std::map<int, std::map<int, RaftLink>>;

struct AdjustmentPlan {
  std::string station;
  int init_hour{};
  int target_lead{};
  int period{kMaxPeriod};
  PeriodRule rule{PeriodRule::Maximum};
  /// One link per predictor lead in [l - period, l - 2].
  std::map<int, RaftLink> links;

  int earliest_predictor() const noexcept { return target_lead - period; }
  int latest_predictor() const noexcept { return target_lead - kMinPredictorOffset; }
  /// Hour after init of the first and last adjustment of this lead.
  int first_execution() const noexcept { return earliest_predictor() + kProcessingDelay; }
  int last_execution() const noexcept { return latest_predictor() + kProcessingDelay; }
  bool covers(int predictor_lead) const noexcept {
    return predictor_lead >= earliest_predictor() && predictor_lead <= latest_predictor();
  }
  const RaftLink* link_for(int predictor_lead) const;
};

/// Fits every link l* in [l-23, l-2] for every target lead of the cell.
CellLinks fit_cell_links(const TrainingErrors& errors);

/// Tiered backward search only; empty when no tier finds a non-significant predictor.
std::optional<int> search_period(const CellLinks& links, int target_lead);

/// Chooses the adjustment period for `target_lead`, falling back to the
/// neighbour average and then to kMaxPeriod.
AdjustmentPlan select_adjustment_period(const CellLinks& links, int target_lead, const CellKey& cell = {});

using CellPlans = std::array<AdjustmentPlan, kMaxLead>;

class RaftModel {
 public:
  void set(const CellKey& cell, CellPlans plans);
  const CellPlans* find(const CellKey& cell) const;
  const AdjustmentPlan* plan(const CellKey& cell, int target_lead) const;
  const std::map<CellKey, CellPlans>& cells() const noexcept { return cells_; }

 private:
  std::map<CellKey, CellPlans> cells_;
};

/// Trains links and plans for every (station, init hour) on runs within
/// the training range. Parallel over cells; independent of worker count.
RaftModel train_raft(const Dataset& data, const emos::EmosForecastSet& emos, Date first, Date last,
                     int workers = 1, std::span<const int> init_hours = kInitHours);

/// A run's EMOS trajectory together with its RAFT-adjusted means.
struct LiveTrajectory {
  std::string station;
  CycleTime cycle;
  emos::EmosTrajectory base{};
  /// EMOS trajectory of the run initialised 24 hours earlier, if available.
  std::optional<emos::EmosTrajectory> previous_day;
  std::array<std::optional<double>, kMaxLead> adjusted{};
  std::array<std::optional<int>, kMaxLead> predictor_used{};

  LiveTrajectory(std::string station_id, CycleTime run, emos::EmosTrajectory emos,
                 std::optional<emos::EmosTrajectory> previous = std::nullopt);

  /// Current best mean for a lead: the adjusted value, else the EMOS mean.
  std::optional<double> current_mean(int lead) const;
  /// EMOS mean used to compute the observed error at `predictor_lead`.
  std::optional<double> reference_mean(int predictor_lead) const;
};

/// Observed error at a predictor lead, always against the EMOS mean of the
/// run that issued it (this run, or the previous day's for leads <= 0).
std::optional<double> observed_error(const LiveTrajectory& live, int predictor_lead,
                                     std::optional<double> observation);

enum class AdjustOutcome : std::uint8_t { Applied, OutsidePlan, UnusableLink, MissingBase };

/// Replaces the adjusted mean of the plan's target lead with
/// base + alpha + beta * error.
AdjustOutcome apply_adjustment(LiveTrajectory& live, int predictor_lead, double error, const AdjustmentPlan& plan);

struct StepEvent {
  std::string station;
  CycleTime cycle;
  int hour{};             ///< hours since init
  int target_lead{};      ///< 0 for events that concern the whole run
  int predictor_lead{};
  enum class Kind : std::uint8_t { Adjusted, MissingObservation, MissingReference, Skipped } kind{Kind::Adjusted};
};

/// Advances every trajectory to wall-clock `now`: the observation at
/// now - 1 (in hours since init) re-adjusts each lead whose plan covers it.
std::vector<StepEvent> step_clock(std::span<LiveTrajectory> live, const Dataset& observations, Instant now,
                                  const RaftModel& model);

}  // namespace traject::raft
