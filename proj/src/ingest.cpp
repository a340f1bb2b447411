#include "traject/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "csv.hpp"
#include "traject/error.hpp"
#include "traject/serialize.hpp"

namespace traject::ingest {

namespace fs = std::filesystem;

namespace {

constexpr int kFirstLeadHour = 1;

/// Stationary AR(1) step with unit marginal variance.
double ar1_next(double prev, double coeff, double innovation) {
  return coeff * prev + std::sqrt(1.0 - coeff * coeff) * innovation;
}

}  // namespace

void SyntheticConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("synthetic config: " + what);
  };
  require(n_stations >= 1, "n_stations must be >= 1");
  require(spinup_days >= 0, "spinup_days must be >= 0");
  require(training_days >= 1, "training_days must be >= 1");
  require(n_days > spinup_days + training_days, "n_days must exceed spinup_days + training_days");
  require(diurnal_amplitude >= 0.0, "diurnal_amplitude must be >= 0");
  require(seasonal_amplitude >= 0.0, "seasonal_amplitude must be >= 0");
  require(truth_ar1_coeff > 0.0 && truth_ar1_coeff < 1.0, "truth_ar1_coeff must lie in (0, 1)");
  require(truth_anomaly_sd >= 0.0, "truth_anomaly_sd must be >= 0");
  require(spread_deflation > 0.0 && spread_deflation <= 1.0, "spread_deflation must lie in (0, 1]");
  require(error_ar1_coeff >= 0.0 && error_ar1_coeff < 1.0, "error_ar1_coeff must lie in [0, 1)");
  require(error_sd > 0.0, "error_sd must be > 0");
  require(error_growth >= 0.0, "error_growth must be >= 0");
  require(cross_run_share >= 0.0 && cross_run_share <= 1.0, "cross_run_share must lie in [0, 1]");
  require(obs_noise_sd >= 0.0, "obs_noise_sd must be >= 0");
  require(missing_obs_fraction >= 0.0 && missing_obs_fraction < 1.0, "missing_obs_fraction must lie in [0, 1)");
  for (double b : forecast_bias) require(std::isfinite(b), "forecast_bias must be finite");
}

DateRange SyntheticConfig::training_range() const {
  const Date first = start + std::chrono::days{spinup_days};
  return {first, first + std::chrono::days{training_days - 1}};
}

DateRange SyntheticConfig::test_range() const {
  return {training_range().last + std::chrono::days{1}, last_day()};
}

Date SyntheticConfig::last_day() const { return start + std::chrono::days{n_days - 1}; }

double site_error_scale(SiteType type) {
  switch (type) {
    case SiteType::Coastal:
      return 0.8;
    case SiteType::Inland:
      return 1.0;
    case SiteType::Mountain:
      return 1.4;
  }
  return 1.0;
}

double PlantedTruth::lead_correlation(int l1, int l2) const {
  return std::pow(config.error_ar1_coeff, std::abs(l1 - l2));
}

double PlantedTruth::error_sd(int lead, SiteType type) const {
  const double growth = 1.0 + config.error_growth * static_cast<double>(lead - 1) / (kMaxLead - 1);
  return config.error_sd * site_error_scale(type) * growth *
         std::sqrt(1.0 + config.spread_deflation * config.spread_deflation / kMembers);
}

void DatasetManifest::validate(const Dataset& data) const {
  if (training_range.last < training_range.first || test_range.last < test_range.first) {
    throw DataError("manifest: empty training or test range");
  }
  if (training_range.overlaps(test_range)) throw DataError("manifest: training and test ranges overlap");
  for (const auto& st : stations) {
    if (!data.has_station(st.id)) throw DataError("manifest: station '" + st.id + "' has no data entry");
  }
  for (const auto& st : data.stations()) {
    bool found = false;
    for (const auto& m : stations) found = found || m.id == st.id;
    if (!found) throw DataError("data references station '" + st.id + "' missing from the manifest");
  }
  for (const auto& c : data.cycles()) {
    if (!std::binary_search(cycles.begin(), cycles.end(), c)) {
      throw DataError("data references cycle " + format_date(c.date()) + " " + std::to_string(c.init_hour()) +
                      "Z missing from the manifest");
    }
  }
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SyntheticDataset out;
  out.truth.config = config;
  auto& data = out.data;
  auto& manifest = out.manifest;
  manifest.provenance = Provenance::Synthetic;
  manifest.training_range = config.training_range();
  manifest.test_range = config.test_range();
  manifest.planted_truth = out.truth;

  const Date first_day = config.start;
  const Date last_day = config.last_day();
  for (Date d = first_day; d <= last_day; d += std::chrono::days{1}) {
    for (int h : kInitHours) manifest.cycles.emplace_back(d, h);
  }

  // Hourly timeline covering every valid time of every run.
  const Instant t0 = instant_of(first_day, kInitHours.front());
  const Instant t1 = instant_of(last_day, kInitHours.back()) + kMaxLead;
  const auto n_hours = static_cast<std::size_t>(t1 - t0 + 1);

  constexpr std::array<SiteType, 3> kTypes{SiteType::Coastal, SiteType::Inland, SiteType::Mountain};
  for (int s = 0; s < config.n_stations; ++s) {
    Station st;
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", s + 1);
    st.id = id;
    st.site_type = kTypes[static_cast<std::size_t>(s) % kTypes.size()];
    st.latitude = 50.0 + 8.0 * uniform(rng);
    st.longitude = -8.0 + 9.0 * uniform(rng);
    st.elevation = st.site_type == SiteType::Mountain ? 400.0 + 700.0 * uniform(rng)
                   : st.site_type == SiteType::Coastal ? 5.0 + 30.0 * uniform(rng)
                                                       : 30.0 + 200.0 * uniform(rng);
    data.add_station(st);
    manifest.stations.push_back(st);

    const double climate_mean = 8.0 + 4.0 * uniform(rng) - st.elevation / 200.0;
    const double scale = site_error_scale(st.site_type);

    std::vector<double> truth(n_hours);
    std::vector<double> shared(n_hours);
    double anomaly = normal(rng);
    double omega = normal(rng);
    for (std::size_t i = 0; i < n_hours; ++i) {
      const Instant t = t0 + static_cast<std::int64_t>(i);
      const double doy = static_cast<double>((date_of(t) - Date{std::chrono::days{0}}).count() % 365) +
                         hour_of_day(t) / 24.0;
      const double seasonal = -config.seasonal_amplitude * std::cos(2.0 * std::numbers::pi * (doy - 15.0) / 365.25);
      const double diurnal =
          config.diurnal_amplitude * std::cos(2.0 * std::numbers::pi * (hour_of_day(t) - 15.0) / 24.0);
      if (i > 0) {
        anomaly = ar1_next(anomaly, config.truth_ar1_coeff, normal(rng));
        omega = ar1_next(omega, config.error_ar1_coeff, normal(rng));
      }
      truth[i] = climate_mean + seasonal + diurnal + config.truth_anomaly_sd * anomaly;
      shared[i] = omega;
    }

    auto& obs = data.observations_for(st.id);
    for (std::size_t i = 0; i < n_hours; ++i) {
      const double noise = config.obs_noise_sd * normal(rng);
      const bool missing = uniform(rng) < config.missing_obs_fraction;
      obs.set(t0 + static_cast<std::int64_t>(i),
              missing ? std::nullopt : std::optional<double>(truth[i] + noise));
    }

    const double k_shared = std::sqrt(config.cross_run_share);
    const double k_own = std::sqrt(1.0 - config.cross_run_share);
    for (const auto& cycle : manifest.cycles) {
      TrajectoryForecast fc{st.id, cycle};
      double own = normal(rng);
      std::array<double, kMembers> jitter{};
      for (double& j : jitter) j = normal(rng);
      for (int l = kFirstLeadHour; l <= kMaxLead; ++l) {
        if (l > kFirstLeadHour) {
          own = ar1_next(own, config.error_ar1_coeff, normal(rng));
          for (double& j : jitter) j = ar1_next(j, config.error_ar1_coeff, normal(rng));
        }
        const LeadTime lead{l};
        const auto idx = static_cast<std::size_t>(valid_time(cycle, lead) - t0);
        const double growth = 1.0 + config.error_growth * static_cast<double>(l - 1) / (kMaxLead - 1);
        const double sd = config.error_sd * scale * growth;
        const double error = sd * (k_shared * shared[idx] + k_own * own);
        const double centre = truth[idx] - error + config.forecast_bias[lead.index()];
        MemberValues members{};
        for (std::size_t m = 0; m < kMembers; ++m) {
          members[m] = centre + config.spread_deflation * sd * jitter[m];
        }
        fc.set(lead, members);
      }
      data.add_forecast(std::move(fc));
    }
  }
  return out;
}

DatasetPaths DatasetPaths::in(const fs::path& dir) {
  return {dir / "forecasts.csv", dir / "observations.csv", dir / "manifest.json"};
}

DatasetPaths write_dataset(const Dataset& data, const DatasetManifest& manifest, const DatasetPaths& paths) {
  for (const auto* p : {&paths.forecasts, &paths.observations, &paths.manifest}) {
    if (p->has_parent_path()) fs::create_directories(p->parent_path());
  }
  {
    std::ofstream out(paths.forecasts, std::ios::binary);
    if (!out) throw DataError("cannot write " + paths.forecasts.string());
    out << "station,date,init_hour,lead";
    for (int m = 1; m <= kMembers; ++m) out << (m < 10 ? ",m0" : ",m") << m;
    out << '\n';
    std::string line;
    for (const auto& st : data.stations()) {
      for (const auto& [cycle, fc] : data.forecasts(st.id)) {
        for (int l = 1; l <= kMaxLead; ++l) {
          const auto& members = fc.at(LeadTime{l});
          if (!members) continue;
          line = st.id + ',' + format_date(cycle.date()) + ',' + std::to_string(cycle.init_hour()) + ',' +
                 std::to_string(l);
          for (double v : *members) {
            line += ',';
            line += csv::format_number(v);
          }
          line += '\n';
          out << line;
        }
      }
    }
    if (!out) throw DataError("write failed for " + paths.forecasts.string());
  }
  {
    std::ofstream out(paths.observations, std::ios::binary);
    if (!out) throw DataError("cannot write " + paths.observations.string());
    out << "station,valid_time_iso8601,temp_c\n";
    for (const auto& st : data.stations()) {
      const auto* series = data.observation_series(st.id);
      if (series == nullptr) continue;
      for (const auto& [t, v] : series->values()) {
        out << st.id << ',' << format_iso8601(t) << ',' << (v ? csv::format_number(*v) : std::string{}) << '\n';
      }
    }
    if (!out) throw DataError("write failed for " + paths.observations.string());
  }
  write_json_file(paths.manifest, to_json(manifest));
  return paths;
}

void read_forecasts_csv(const fs::path& path, Dataset& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) return;
  ++row;
  csv::strip_cr(line);
  {
    std::string expected = "station,date,init_hour,lead";
    for (int m = 1; m <= kMembers; ++m) expected += (m < 10 ? ",m0" : ",m") + std::to_string(m);
    if (line != expected) throw DataError(path.string() + ": row 1: unexpected header '" + line + "'");
  }
  struct Key {
    CycleTime cycle;
    int lead;
    auto operator<=>(const Key&) const = default;
  };
  std::map<std::string, Key> last_key;
  std::map<std::string, std::map<CycleTime, TrajectoryForecast>> pending;
  while (std::getline(in, line)) {
    ++row;
    csv::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    auto fail = [&](const std::string& msg) {
      throw DataError(path.string() + ": row " + std::to_string(row) + ": " + msg);
    };
    if (fields.size() != 4 + kMembers) {
      fail("expected " + std::to_string(4 + kMembers) + " fields, got " + std::to_string(fields.size()));
    }
    try {
      const std::string station{fields[0]};
      const CycleTime cycle{parse_date(fields[1]), csv::parse_int(fields[2])};
      const int lead = csv::parse_int(fields[3]);
      const LeadTime lt{lead};
      MemberValues members{};
      for (std::size_t m = 0; m < kMembers; ++m) members[m] = csv::parse_double(fields[4 + m]);
      const Key key{cycle, lead};
      auto it = last_key.find(station);
      if (it != last_key.end() && !(it->second < key)) fail("timestamps not strictly increasing for " + station);
      last_key.insert_or_assign(station, key);
      if (!data.has_station(station)) data.add_station(Station{station, SiteType::Inland, 0.0, 0.0, 0.0});
      auto& runs = pending[station];
      auto [rit, inserted] = runs.try_emplace(cycle, station, cycle);
      rit->second.set(lt, members);
    } catch (const DataError& e) {
      if (std::string_view(e.what()).find(": row ") != std::string_view::npos) throw;
      fail(e.what());
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
  for (auto& [station, runs] : pending) {
    for (auto& [cycle, fc] : runs) data.add_forecast(std::move(fc));
  }
}

void read_observations_csv(const fs::path& path, Dataset& data) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) return;
  ++row;
  csv::strip_cr(line);
  if (line != "station,valid_time_iso8601,temp_c") {
    throw DataError(path.string() + ": row 1: unexpected header '" + line + "'");
  }
  std::map<std::string, Instant> last_time;
  while (std::getline(in, line)) {
    ++row;
    csv::strip_cr(line);
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    auto fail = [&](const std::string& msg) {
      throw DataError(path.string() + ": row " + std::to_string(row) + ": " + msg);
    };
    if (fields.size() != 3) fail("expected 3 fields, got " + std::to_string(fields.size()));
    try {
      const std::string station{fields[0]};
      const Instant t = parse_iso8601(fields[1]);
      auto it = last_time.find(station);
      if (it != last_time.end() && !(it->second < t)) fail("timestamps not strictly increasing for " + station);
      last_time.insert_or_assign(station, t);
      if (!data.has_station(station)) data.add_station(Station{station, SiteType::Inland, 0.0, 0.0, 0.0});
      std::optional<double> value;
      if (!fields[2].empty()) value = csv::parse_double(fields[2]);
      data.observations_for(station).set(t, value);
    } catch (const DataError& e) {
      if (std::string_view(e.what()).find(": row ") != std::string_view::npos) throw;
      fail(e.what());
    }
  }
}

LoadedDataset read_dataset(const DatasetPaths& paths) {
  LoadedDataset out;
  if (fs::exists(paths.manifest)) {
    out.manifest = manifest_from_json(read_json_file(paths.manifest));
    for (const auto& st : out.manifest.stations) out.data.add_station(st);
  }
  read_forecasts_csv(paths.forecasts, out.data);
  read_observations_csv(paths.observations, out.data);
  if (fs::exists(paths.manifest)) out.manifest.validate(out.data);
  return out;
}

}  // namespace traject::ingest
