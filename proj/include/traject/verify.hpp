#pragma once

// Scores, calibration diagnostics, bootstrap intervals and sliced
// aggregation over verification cases.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "traject/core.hpp"
#include "traject/emos.hpp"

namespace traject::verify {

inline constexpr int kRankBins = kMembers + 1;
inline constexpr int kDefaultPitBins = 20;
/// Nominal coverage of the 12-member envelope.
inline constexpr double kEnvelopeNominal = 11.0 / 13.0;

/// Throws DataError for empty or mismatched inputs.
double rmse(std::span<const double> mean_forecasts, std::span<const double> observations);

/// Ensemble CRPS: mean |X_i - y| minus half the mean pairwise |X_i - X_j|.
double crps_ensemble(std::span<const double> members, double y);

double pit(const emos::GaussianForecast& forecast, double y);

/// 1 + number of members strictly below y, with ties to y broken uniformly
/// at random; result in [1, m + 1].
int rank(std::span<const double> members, double y, std::mt19937_64& rng);

struct Interval {
  double low{};
  double high{};

  bool contains(double y) const { return low <= y && y <= high; }
};

/// Central interval of a Gaussian forecast with probability `nominal`.
Interval central_interval(const emos::GaussianForecast& forecast, double nominal);
Interval envelope(std::span<const double> members);

/// Fraction of observations inside their interval.
double coverage(std::span<const Interval> intervals, std::span<const double> observations);

/// 1 - model / reference. Throws ConfigError if the reference is not positive.
double skill_score(double score_model, double score_reference);

struct BootstrapInterval {
  double low{};
  double mean{};
  double high{};
};

/// Percentile bootstrap of the mean of `case_scores`.
BootstrapInterval bootstrap_ci(std::span<const double> case_scores, int n_resamples, double level,
                               std::uint64_t seed);

/// Percentile bootstrap of an arbitrary statistic of resampled case indices.
/// `mean` is the statistic on the original sample.
BootstrapInterval bootstrap_statistic(std::size_t n_cases, int n_resamples, double level, std::uint64_t seed,
                                      const std::function<double(std::span<const std::size_t>)>& statistic);

enum class HistogramKind : std::uint8_t { Rank, Pit };

struct Histogram {
  HistogramKind kind{HistogramKind::Pit};
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
};

/// Histogram of ranks in [1, 13].
Histogram rank_histogram(std::span<const int> ranks);
Histogram pit_histogram(std::span<const double> pit_values, int bins = kDefaultPitBins);

/// Chi-square goodness of fit of the histogram against equal bin frequencies.
double chi_square_uniform_pvalue(const Histogram& h);
/// Variance of the normalised bin position (0 at the first bin, 1 at the
/// last) under the histogram; 1/12-ish for flat, larger for U shapes.
double histogram_dispersion(const Histogram& h);

enum class Season : std::uint8_t { DJF, MAM, JJA, SON };
std::string_view to_string(Season s);
Season parse_season(std::string_view text);
Season season_of(Instant t);

/// One forecast-observation case with every forecast flavour attached.
struct VerificationCase {
  std::string station;
  SiteType site_type{SiteType::Inland};
  int init_hour{};
  int lead{};
  Instant valid{};
  double y{};
  std::optional<MemberValues> members;
  emos::GaussianForecast emos;
  double raft_mu{};
};

struct ScoreSlice {
  std::optional<std::string> station;
  std::optional<SiteType> site_type;
  std::optional<int> init_hour;
  std::optional<int> lead_min;
  std::optional<int> lead_max;
  std::optional<Season> season;
  std::optional<int> hour_of_day;

  bool accepts(const VerificationCase& c) const;
  /// Canonical text form, e.g. "site_type=coastal;lead=1-12". "all" when unfiltered.
  std::string describe() const;
  /// Parses the describe() form.
  static ScoreSlice parse(std::string_view text);

  static ScoreSlice lead_band(int lo, int hi);
};

/// Forecast system a metric applies to; RAFT uses its mean with the EMOS variance.
enum class System : std::uint8_t { Raw, Emos, Raft };
enum class MetricKind : std::uint8_t { Rmse, Crps, Coverage };

struct Metric {
  MetricKind kind{MetricKind::Rmse};
  System system{System::Emos};

  std::string name() const;
  static Metric parse(std::string_view text);
};

/// Per-case contribution: squared error, CRPS, or a 0/1 coverage hit.
/// Coverage uses the 11/13 central interval (Gaussian) or the envelope (raw).
double case_score(const VerificationCase& c, Metric metric);
/// Reduces per-case scores to the metric value (sqrt of the mean for RMSE).
double reduce(MetricKind kind, double mean_case_score);

struct VerificationReport {
  Metric metric;
  ScoreSlice slice;
  std::size_t n{};
  double value{};
  std::optional<BootstrapInterval> ci;
  /// Figure panel or snapshot tag; empty for single-panel reports.
  std::string panel;
};

struct BootstrapOptions {
  int n_resamples{1000};
  double level{0.90};
  std::uint64_t seed{1};
};

/// Metric over exactly the cases passing the slice. Throws DataError naming
/// the slice when no case passes.
VerificationReport aggregate(std::span<const VerificationCase> cases, const ScoreSlice& slice, Metric metric,
                             const std::optional<BootstrapOptions>& bootstrap = std::nullopt);

/// report.json and report.csv with one entry per report.
void write_reports(const std::filesystem::path& json_path, const std::filesystem::path& csv_path,
                   std::span<const VerificationReport> reports);

struct LabeledHistogram {
  std::string label;
  Histogram histogram;
};

/// label,kind,bin,count CSV for plotting, one block per histogram.
void write_histogram_csv(const std::filesystem::path& path, std::span<const LabeledHistogram> histograms);

}  // namespace traject::verify
