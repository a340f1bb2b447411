#pragma once

// Domain types shared by every module: stations, forecast cycles, lead
// times, ensemble trajectories, observations, and the in-memory dataset.

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace traject {

inline constexpr int kMembers = 12;
inline constexpr int kMaxLead = 36;
inline constexpr std::array<int, 4> kInitHours{3, 9, 15, 21};

enum class SiteType : std::uint8_t { Coastal, Inland, Mountain };

std::string_view to_string(SiteType type);
SiteType parse_site_type(std::string_view text);

struct Station {
  std::string id;
  SiteType site_type{SiteType::Inland};
  double latitude{};
  double longitude{};
  double elevation{};

  bool operator==(const Station&) const = default;
};

using Date = std::chrono::sys_days;

Date make_date(int year, unsigned month, unsigned day);
/// YYYY-MM-DD
std::string format_date(Date date);
Date parse_date(std::string_view text);

/// A UTC instant at hourly resolution, counted from 1970-01-01T00:00Z.
struct Instant {
  std::int64_t hours{};

  auto operator<=>(const Instant&) const = default;
  Instant operator+(std::int64_t h) const { return Instant{hours + h}; }
  Instant operator-(std::int64_t h) const { return Instant{hours - h}; }
  std::int64_t operator-(Instant other) const { return hours - other.hours; }
};

Instant instant_of(Date date, int hour = 0);
Date date_of(Instant t);
int hour_of_day(Instant t);
/// YYYY-MM-DDTHH:00:00Z
std::string format_iso8601(Instant t);
/// Accepts YYYY-MM-DDTHH[:MM[:SS]][Z]; minutes and seconds must be zero.
Instant parse_iso8601(std::string_view text);

class LeadTime {
 public:
  explicit LeadTime(int hours);
  int hours() const noexcept { return hours_; }
  /// Zero-based slot in per-lead arrays.
  std::size_t index() const noexcept { return static_cast<std::size_t>(hours_ - 1); }
  auto operator<=>(const LeadTime&) const = default;

 private:
  int hours_;
};

bool is_init_hour(int hour) noexcept;
/// Throws ConfigError unless the list is non-empty, strictly increasing, and
/// made of scheduled init hours.
void require_init_hours(std::span<const int> hours);

class CycleTime {
 public:
  CycleTime(Date date, int init_hour);

  Date date() const noexcept { return date_; }
  int init_hour() const noexcept { return init_hour_; }
  Instant init_instant() const { return instant_of(date_, init_hour_); }

  auto operator<=>(const CycleTime&) const = default;

 private:
  Date date_;
  int init_hour_;
};

Instant valid_time(const CycleTime& cycle, LeadTime lead);
/// Same init hour, one day earlier.
CycleTime previous_day_run(const CycleTime& cycle);
CycleTime next_day_run(const CycleTime& cycle);
/// The cycle immediately preceding this one in the four-runs-a-day schedule.
CycleTime previous_cycle(const CycleTime& cycle);
CycleTime next_cycle(const CycleTime& cycle);

using MemberValues = std::array<double, kMembers>;

/// One model run's hourly ensemble trajectory at one station.
struct TrajectoryForecast {
  std::string station;
  CycleTime cycle;
  std::array<std::optional<MemberValues>, kMaxLead> leads{};

  TrajectoryForecast(std::string station_id, CycleTime run) : station(std::move(station_id)), cycle(run) {}

  const std::optional<MemberValues>& at(LeadTime lead) const { return leads[lead.index()]; }
  /// Throws DataError if any member is not finite.
  void set(LeadTime lead, const MemberValues& members);

  bool operator==(const TrajectoryForecast&) const = default;
};

struct EnsembleStats {
  double mean{};
  double variance{};
};

/// Mean and variance (divisor m) of an ensemble.
EnsembleStats ensemble_stats(std::span<const double> members);
/// Throws DataError when the lead is absent from the forecast.
EnsembleStats ensemble_stats(const TrajectoryForecast& forecast, LeadTime lead);

class ObservationSeries {
 public:
  ObservationSeries() = default;
  explicit ObservationSeries(std::string station) : station_(std::move(station)) {}

  const std::string& station() const noexcept { return station_; }
  /// An empty optional records an explicitly missing observation.
  /// Throws DataError on a second entry for the same instant.
  void set(Instant t, std::optional<double> value);
  std::optional<double> at(Instant t) const;
  bool contains(Instant t) const { return values_.contains(t); }
  const std::map<Instant, std::optional<double>>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  bool operator==(const ObservationSeries&) const = default;

 private:
  std::string station_;
  std::map<Instant, std::optional<double>> values_;
};

/// Forecasts and observations for a set of stations.
class Dataset {
 public:
  using ForecastMap = std::map<CycleTime, TrajectoryForecast>;

  void add_station(Station station);
  /// Replaces any existing trajectory for the same station and cycle.
  void add_forecast(TrajectoryForecast forecast);
  ObservationSeries& observations_for(const std::string& station);

  const std::vector<Station>& stations() const noexcept { return stations_; }
  const Station& station(const std::string& id) const;
  bool has_station(const std::string& id) const;

  const TrajectoryForecast* forecast(const std::string& station, const CycleTime& cycle) const;
  const ForecastMap& forecasts(const std::string& station) const;
  std::optional<double> observation(const std::string& station, Instant t) const;
  const ObservationSeries* observation_series(const std::string& station) const;

  std::size_t forecast_count() const;
  std::vector<CycleTime> cycles() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<Station> stations_;
  std::map<std::string, ForecastMap> forecasts_;
  std::map<std::string, ObservationSeries> observations_;
};

}  // namespace traject
