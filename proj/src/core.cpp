#include "traject/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "traject/error.hpp"

namespace traject {

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DataError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::string_view to_string(SiteType type) {
  switch (type) {
    case SiteType::Coastal:
      return "coastal";
    case SiteType::Inland:
      return "inland";
    case SiteType::Mountain:
      return "mountain";
  }
  return "inland";
}

SiteType parse_site_type(std::string_view text) {
  if (text == "coastal") return SiteType::Coastal;
  if (text == "inland") return SiteType::Inland;
  if (text == "mountain") return SiteType::Mountain;
  throw DataError("unknown site type '" + std::string(text) + "'");
}

Date make_date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw DataError("invalid calendar date");
  return Date{ymd};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const int y = parse_int(text.substr(0, 4), "year");
  const int m = parse_int(text.substr(5, 2), "month");
  const int d = parse_int(text.substr(8, 2), "day");
  if (m < 1 || d < 1) throw DataError("invalid date '" + std::string(text) + "'");
  return make_date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

Instant instant_of(Date date, int hour) {
  return Instant{static_cast<std::int64_t>(date.time_since_epoch().count()) * 24 + hour};
}

Date date_of(Instant t) { return Date{std::chrono::days{floor_div(t.hours, 24)}}; }

int hour_of_day(Instant t) { return static_cast<int>(t.hours - floor_div(t.hours, 24) * 24); }

std::string format_iso8601(Instant t) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "T%02d", hour_of_day(t));
  return format_date(date_of(t)) + buf + ":00:00Z";
}

Instant parse_iso8601(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 13 || text[10] != 'T') {
    throw DataError("invalid timestamp '" + std::string(text) + "'");
  }
  const Date date = parse_date(text.substr(0, 10));
  const int hour = parse_int(text.substr(11, 2), "hour");
  if (hour < 0 || hour > 23) throw DataError("invalid hour in '" + std::string(text) + "'");
  std::string_view rest = text.substr(13);
  while (!rest.empty()) {
    if (rest.size() < 3 || rest[0] != ':' || parse_int(rest.substr(1, 2), "minute") != 0) {
      throw DataError("timestamp '" + std::string(text) + "' is not on the hour");
    }
    rest.remove_prefix(3);
  }
  return instant_of(date, hour);
}

LeadTime::LeadTime(int hours) : hours_(hours) {
  if (hours < 1 || hours > kMaxLead) {
    throw ConfigError("lead time " + std::to_string(hours) + " outside [1, 36]");
  }
}

bool is_init_hour(int hour) noexcept {
  return std::find(kInitHours.begin(), kInitHours.end(), hour) != kInitHours.end();
}

void require_init_hours(std::span<const int> hours) {
  if (hours.empty()) throw ConfigError("no init hours selected");
  for (std::size_t i = 0; i < hours.size(); ++i) {
    if (!is_init_hour(hours[i])) {
      throw ConfigError("init hour " + std::to_string(hours[i]) + " is not one of 3, 9, 15, 21");
    }
    if (i > 0 && hours[i] <= hours[i - 1]) throw ConfigError("init hours must be listed once, in increasing order");
  }
}

CycleTime::CycleTime(Date date, int init_hour) : date_(date), init_hour_(init_hour) {
  if (!is_init_hour(init_hour)) {
    throw ConfigError("init hour " + std::to_string(init_hour) + " is not one of 3, 9, 15, 21");
  }
}

Instant valid_time(const CycleTime& cycle, LeadTime lead) { return cycle.init_instant() + lead.hours(); }

CycleTime previous_day_run(const CycleTime& cycle) {
  return CycleTime{cycle.date() - std::chrono::days{1}, cycle.init_hour()};
}

CycleTime next_day_run(const CycleTime& cycle) {
  return CycleTime{cycle.date() + std::chrono::days{1}, cycle.init_hour()};
}

CycleTime previous_cycle(const CycleTime& cycle) {
  if (cycle.init_hour() == kInitHours.front()) {
    return CycleTime{cycle.date() - std::chrono::days{1}, kInitHours.back()};
  }
  return CycleTime{cycle.date(), cycle.init_hour() - 6};
}

CycleTime next_cycle(const CycleTime& cycle) {
  if (cycle.init_hour() == kInitHours.back()) {
    return CycleTime{cycle.date() + std::chrono::days{1}, kInitHours.front()};
  }
  return CycleTime{cycle.date(), cycle.init_hour() + 6};
}

void TrajectoryForecast::set(LeadTime lead, const MemberValues& members) {
  for (double v : members) {
    if (!std::isfinite(v)) {
      throw DataError("non-finite member value for station " + station + " at lead " +
                      std::to_string(lead.hours()));
    }
  }
  leads[lead.index()] = members;
}

EnsembleStats ensemble_stats(std::span<const double> members) {
  if (members.empty()) throw DataError("ensemble_stats: no members");
  double sum = 0.0;
  for (double x : members) sum += x;
  const double n = static_cast<double>(members.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : members) ss += (x - mean) * (x - mean);
  return {mean, ss / n};
}

EnsembleStats ensemble_stats(const TrajectoryForecast& forecast, LeadTime lead) {
  const auto& members = forecast.at(lead);
  if (!members) {
    throw DataError("no members for station " + forecast.station + " at lead " +
                    std::to_string(lead.hours()));
  }
  return ensemble_stats(std::span<const double>(*members));
}

void ObservationSeries::set(Instant t, std::optional<double> value) {
  if (value && !std::isfinite(*value)) {
    throw DataError("non-finite observation at " + format_iso8601(t) + " for station " + station_);
  }
  auto [it, inserted] = values_.emplace(t, value);
  if (!inserted) {
    throw DataError("duplicate observation at " + format_iso8601(t) + " for station " + station_);
  }
}

std::optional<double> ObservationSeries::at(Instant t) const {
  auto it = values_.find(t);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void Dataset::add_station(Station station) {
  if (has_station(station.id)) throw DataError("duplicate station id '" + station.id + "'");
  forecasts_.try_emplace(station.id);
  observations_.try_emplace(station.id, ObservationSeries{station.id});
  stations_.push_back(std::move(station));
}

void Dataset::add_forecast(TrajectoryForecast forecast) {
  auto it = forecasts_.find(forecast.station);
  if (it == forecasts_.end()) throw DataError("forecast for unknown station '" + forecast.station + "'");
  const CycleTime key = forecast.cycle;
  it->second.insert_or_assign(key, std::move(forecast));
}

ObservationSeries& Dataset::observations_for(const std::string& station) {
  auto it = observations_.find(station);
  if (it == observations_.end()) throw DataError("observations for unknown station '" + station + "'");
  return it->second;
}

const Station& Dataset::station(const std::string& id) const {
  for (const auto& s : stations_) {
    if (s.id == id) return s;
  }
  throw DataError("unknown station '" + id + "'");
}

bool Dataset::has_station(const std::string& id) const { return forecasts_.contains(id); }

const TrajectoryForecast* Dataset::forecast(const std::string& station, const CycleTime& cycle) const {
  auto it = forecasts_.find(station);
  if (it == forecasts_.end()) return nullptr;
  auto jt = it->second.find(cycle);
  return jt == it->second.end() ? nullptr : &jt->second;
}

const Dataset::ForecastMap& Dataset::forecasts(const std::string& station) const {
  auto it = forecasts_.find(station);
  if (it == forecasts_.end()) throw DataError("unknown station '" + station + "'");
  return it->second;
}

std::optional<double> Dataset::observation(const std::string& station, Instant t) const {
  auto it = observations_.find(station);
  if (it == observations_.end()) return std::nullopt;
  return it->second.at(t);
}

const ObservationSeries* Dataset::observation_series(const std::string& station) const {
  auto it = observations_.find(station);
  return it == observations_.end() ? nullptr : &it->second;
}

std::size_t Dataset::forecast_count() const {
  std::size_t n = 0;
  for (const auto& [id, m] : forecasts_) n += m.size();
  return n;
}

std::vector<CycleTime> Dataset::cycles() const {
  std::set<CycleTime> all;
  for (const auto& [id, m] : forecasts_) {
    for (const auto& [cycle, f] : m) all.insert(cycle);
  }
  return {all.begin(), all.end()};
}

}  // namespace traject
