#pragma once

// Local EMOS: a Gaussian predictive distribution N(a + b^2 * mean, c^2 + d^2 * var)
// fitted by minimum mean CRPS over a rolling window, separately for every
// (station, init hour, lead time) cell.

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "traject/core.hpp"

namespace traject::emos {

inline constexpr int kWindowDays = 40;
inline constexpr int kMinTrainingPairs = 30;
/// Lower bound imposed on c^2 so every issued predictive variance is positive.
inline constexpr double kMinVarianceIntercept = 1e-6;

struct CellKey {
  std::string station;
  int init_hour{};
  int lead{};

  auto operator<=>(const CellKey&) const = default;
};

enum class FitStatus : std::uint8_t {
  Fitted,         ///< minimum-CRPS fit on the cell's own window
  Reused,         ///< too few pairs; coefficients carried over from the last fit
  Climatological, ///< too few pairs and no earlier fit: (0, 1, sd of errors, 0)
};

std::string_view to_string(FitStatus status);
FitStatus parse_fit_status(std::string_view text);

struct EmosParams {
  double a{0.0};
  double b{1.0};
  double c{0.5};
  double d{1.0};

  CellKey cell{};
  int n_train{0};
  std::optional<Date> window_begin;  ///< inclusive
  std::optional<Date> window_end;    ///< inclusive
  std::optional<Date> as_of;         ///< init date of the forecasts these parameters correct
  FitStatus status{FitStatus::Fitted};
  int iterations{0};
  bool converged{true};

  double mean_slope() const noexcept { return b * b; }
  double variance_intercept() const noexcept { return c * c; }
  double variance_slope() const noexcept { return d * d; }
};

struct GaussianForecast {
  double mu{};
  double sigma2{};

  double sigma() const;
  bool operator==(const GaussianForecast&) const = default;
};

/// Closed-form CRPS of N(mu, sigma^2) at y. Throws ConfigError if sigma <= 0.
double crps_gaussian(double mu, double sigma, double y);

struct TrainingPair {
  EnsembleStats stats;
  double y{};
};

/// Mean CRPS of the parameters over the pairs. A non-positive predictive
/// variance scores as a point mass at mu.
double mean_crps(double a, double b, double c, double d, std::span<const TrainingPair> pairs);
double mean_crps(const EmosParams& params, std::span<const TrainingPair> pairs);

struct FitOptions {
  double tolerance{1e-8};
  int max_iterations{500};
  double initial_step{0.1};
  int min_pairs{kMinTrainingPairs};
};

/// Minimum-CRPS estimate starting from `init`. Only the coefficients of
/// `init` are used. Throws InsufficientDataError with fewer than
/// `options.min_pairs` pairs. Non-convergence is reported through
/// `converged` and `iterations` rather than thrown.
EmosParams fit_emos(std::span<const TrainingPair> pairs, const EmosParams& init = {},
                    const FitOptions& options = {});

/// Throws ConfigError if c = d = 0.
GaussianForecast predict_emos(const EmosParams& params, const EnsembleStats& stats);

/// Pairs for `cell` from the kWindowDays calendar days before `as_of`.
/// A pair needs an observation whose valid time is no later than the
/// init instant of the `as_of` run.
std::vector<TrainingPair> training_window(const Dataset& data, const CellKey& cell, Date as_of);

/// Fits the cell on its window. With too few pairs, reuses `previous` when
/// it came from a successful fit, else falls back to climatology.
EmosParams rolling_fit(const Dataset& data, const CellKey& cell, Date as_of,
                       const EmosParams* previous = nullptr, const FitOptions& options = {});

/// Daily parameter sets for every cell.
class EmosModel {
 public:
  void add(EmosParams params);
  /// Parameters fitted for runs initialised on `date`.
  const EmosParams* find(const CellKey& cell, Date date) const;
  const std::map<CellKey, std::map<Date, EmosParams>>& cells() const noexcept { return cells_; }
  std::size_t size() const;

 private:
  std::map<CellKey, std::map<Date, EmosParams>> cells_;
};

/// Rolling fits for every station, init hour, and lead from `first` to
/// `last` inclusive, warm-starting each day from the previous day's fit.
/// Cells are distributed over `workers` threads; the result does not
/// depend on the worker count.
EmosModel fit_emos_model(const Dataset& data, Date first, Date last, int workers = 1,
                         const FitOptions& options = {}, std::span<const int> init_hours = kInitHours);

/// EMOS predictive distributions per lead for one run.
using EmosTrajectory = std::array<std::optional<GaussianForecast>, kMaxLead>;

struct RunKey {
  std::string station;
  CycleTime cycle;

  auto operator<=>(const RunKey&) const = default;
};

using EmosForecastSet = std::map<RunKey, EmosTrajectory>;

/// Applies the model to every run in the dataset that has parameters.
EmosForecastSet predict_all(const Dataset& data, const EmosModel& model);

}  // namespace traject::emos
