#pragma once

// Dataset interchange (CSV + JSON manifest) and the synthetic generator
// whose planted parameters serve as test oracles.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "traject/core.hpp"

namespace traject::ingest {

struct DateRange {
  Date first;  ///< inclusive
  Date last;   ///< inclusive

  bool contains(Date d) const { return first <= d && d <= last; }
  bool overlaps(const DateRange& other) const { return first <= other.last && other.first <= last; }
  bool operator==(const DateRange&) const = default;
};

enum class Provenance : std::uint8_t { Synthetic, External };

constexpr std::array<double, kMaxLead> constant_bias(double value) {
  std::array<double, kMaxLead> bias{};
  for (double& b : bias) b = value;
  return bias;
}

struct SyntheticConfig {
  std::uint64_t seed{7};
  int n_stations{10};
  int n_days{550};
  /// Days before the training range so the first training runs have a full
  /// EMOS window.
  int spinup_days{40};
  int training_days{365};
  Date start{make_date(2013, 11, 22)};

  double diurnal_amplitude{4.0};
  /// Annual cycle of the truth; off by default so the truth is diurnal cycle plus AR(1).
  double seasonal_amplitude{0.0};
  /// Hour-to-hour AR(1) coefficient of the truth anomaly.
  double truth_ar1_coeff{0.98};
  double truth_anomaly_sd{3.0};

  /// Additive member bias per lead time (the offsets EMOS must remove).
  std::array<double, kMaxLead> forecast_bias{constant_bias(0.5)};
  /// Member spread relative to the error scale; below 1 the ensemble is underdispersed.
  double spread_deflation{0.5};
  /// Lead-to-lead AR(1) coefficient of the shared forecast error.
  double error_ar1_coeff{0.8};
  /// Marginal error sd at lead 1.
  double error_sd{1.0};
  /// Relative growth of the error sd from lead 1 to lead 36.
  double error_growth{1.0};
  /// Fraction of error variance shared by all runs valid at the same instant;
  /// this is what makes the previous day's run informative.
  double cross_run_share{0.5};
  double obs_noise_sd{0.0};
  double missing_obs_fraction{0.005};

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  DateRange training_range() const;
  DateRange test_range() const;
  Date last_day() const;
};

/// Error sd multiplier per site type in the generator.
double site_error_scale(SiteType type);

struct PlantedTruth {
  SyntheticConfig config;
  /// Population error correlation between leads l1 and l2 within one run:
  /// error_ar1_coeff^|l1 - l2|.
  double lead_correlation(int l1, int l2) const;
  /// Marginal sd of the member-mean error at a lead for a site type.
  double error_sd(int lead, SiteType type) const;
};

struct DatasetManifest {
  std::vector<Station> stations;
  std::vector<CycleTime> cycles;
  DateRange training_range;
  DateRange test_range;
  Provenance provenance{Provenance::External};
  std::optional<PlantedTruth> planted_truth;

  /// Throws DataError if the ranges overlap or a cycle/station is inconsistent.
  void validate(const Dataset& data) const;
};

struct SyntheticDataset {
  Dataset data;
  DatasetManifest manifest;
  PlantedTruth truth;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& config);

struct DatasetPaths {
  std::filesystem::path forecasts;
  std::filesystem::path observations;
  std::filesystem::path manifest;

  static DatasetPaths in(const std::filesystem::path& dir);
};

struct LoadedDataset {
  Dataset data;
  DatasetManifest manifest;
};

/// Writes forecasts.csv, observations.csv and manifest.json. Numbers use the
/// shortest representation that round-trips exactly.
DatasetPaths write_dataset(const Dataset& data, const DatasetManifest& manifest, const DatasetPaths& paths);
LoadedDataset read_dataset(const DatasetPaths& paths);

/// Parses only the CSV payloads; used when no manifest is present.
void read_forecasts_csv(const std::filesystem::path& path, Dataset& data);
void read_observations_csv(const std::filesystem::path& path, Dataset& data);

}  // namespace traject::ingest
