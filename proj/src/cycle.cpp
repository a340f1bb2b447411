#include "traject/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "parallel.hpp"
#include "traject/error.hpp"

namespace traject::cycle {

namespace {

constexpr std::string_view kLedgerHeader =
    "station,cycle_date,init_hour,lead,wallclock_hour,source,predictor_lead,mu_hat,sigma2,obs";

std::string run_label(const std::string& station, const CycleTime& cycle) {
  return station + " " + format_iso8601(cycle.init_instant());
}

std::size_t slot(int lead) { return static_cast<std::size_t>(lead - 1); }

}  // namespace

CyclePolicy CyclePolicy::emos_only() { return {PolicyMode::EmosOnly, -1, RunSelection::NewestRun}; }

CyclePolicy CyclePolicy::raft_full() { return {PolicyMode::RaftFull, kMaxLead - 1, RunSelection::NewestRun}; }

CyclePolicy CyclePolicy::raft_until(int hour) {
  if (hour < 0 || hour >= kMaxLead) {
    throw ConfigError("raft_until hour must be in [0, " + std::to_string(kMaxLead - 1) + "], got " +
                      std::to_string(hour));
  }
  return {PolicyMode::RaftUntil, hour, RunSelection::NewestRun};
}

bool CyclePolicy::adjusts_at(int hour) const {
  switch (mode) {
    case PolicyMode::EmosOnly: return false;
    case PolicyMode::RaftFull: return true;
    case PolicyMode::RaftUntil: return hour <= until_hour;
  }
  return false;
}

std::string CyclePolicy::describe() const {
  switch (mode) {
    case PolicyMode::EmosOnly: return "emos_only";
    case PolicyMode::RaftFull: return "raft_full";
    case PolicyMode::RaftUntil: return "raft_until:" + std::to_string(until_hour);
  }
  return {};
}

CyclePolicy CyclePolicy::parse(std::string_view text) {
  if (text == "emos_only") return emos_only();
  if (text == "raft_full") return raft_full();
  constexpr std::string_view prefix = "raft_until:";
  if (text.starts_with(prefix)) {
    try {
      return raft_until(csv::parse_int(text.substr(prefix.size())));
    } catch (const DataError&) {
      // fall through to the generic message
    }
  }
  throw ConfigError("unknown policy '" + std::string(text) + "' (expected emos_only, raft_full or raft_until:<hour>)");
}

std::optional<InForce> CycleRecord::in_force(int lead, int hour) const {
  if (lead < 1 || lead > kMaxLead) throw ConfigError("lead out of range: " + std::to_string(lead));
  const auto& base = emos[slot(lead)];
  if (!base) return std::nullopt;
  InForce out{Source::Emos, std::nullopt, base->mu, base->sigma2};
  if (hour < 0) return out;
  for (const auto& entry : adjustments[slot(lead)]) {
    if (entry.hour > hour) break;
    out.source = Source::Raft;
    out.predictor_lead = entry.predictor_lead;
    out.mu_hat = entry.mu_hat;
  }
  return out;
}

void CycleLedger::append(CycleRecord record) {
  if (!records_.empty()) {
    const auto& last = records_.back();
    if (std::tie(last.station, last.cycle) >= std::tie(record.station, record.cycle)) {
      throw DataError("ledger records out of order at " + run_label(record.station, record.cycle));
    }
  }
  for (const auto& adjustments : record.adjustments) {
    for (std::size_t i = 1; i < adjustments.size(); ++i) {
      if (adjustments[i].hour <= adjustments[i - 1].hour) {
        throw DataError("two forecasts in force at the same hour for " + run_label(record.station, record.cycle));
      }
    }
  }
  records_.push_back(std::move(record));
}

const CycleRecord* CycleLedger::find(const std::string& station, const CycleTime& cycle) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), std::tie(station, cycle),
                             [](const CycleRecord& r, const auto& key) { return std::tie(r.station, r.cycle) < key; });
  if (it == records_.end() || it->station != station || it->cycle != cycle) return nullptr;
  return &*it;
}

CycleLedger replay(const Dataset& data, const emos::EmosForecastSet& emos, const raft::RaftModel& model,
                   const CyclePolicy& policy, Date first, Date last, int workers, ReplayLog* log,
                   std::span<const int> init_hours) {
  if (last < first) throw ConfigError("replay range is empty");
  require_init_hours(init_hours);
  const auto& stations = data.stations();
  std::vector<std::vector<CycleRecord>> per_station(stations.size());
  std::vector<std::vector<std::string>> messages(stations.size());

  detail::parallel_for(stations.size(), workers, [&](std::size_t s) {
    const auto& id = stations[s].id;
    auto& out = per_station[s];
    auto& notes = messages[s];
    std::size_t missing_obs = 0;
    for (Date day = first; day <= last; day += std::chrono::days{1}) {
      for (int init : init_hours) {
        const CycleTime cycle(day, init);
        auto it = emos.find({id, cycle});
        if (it == emos.end()) {
          notes.push_back("no EMOS forecast for " + run_label(id, cycle) + "; run skipped");
          continue;
        }
        CycleRecord record(id, cycle);
        record.emos = it->second;
        for (int l = 1; l <= kMaxLead; ++l) {
          record.obs[slot(l)] = data.observation(id, valid_time(cycle, LeadTime(l)));
        }
        if (policy.mode != PolicyMode::EmosOnly) {
          if (model.find({id, init}) == nullptr) {
            notes.push_back("no RAFT plan for " + run_label(id, cycle) + "; EMOS only");
          } else {
            std::optional<emos::EmosTrajectory> previous;
            if (auto p = emos.find({id, previous_day_run(cycle)}); p != emos.end()) previous = p->second;
            raft::LiveTrajectory live(id, cycle, record.emos, std::move(previous));
            for (int h = 0; h < kMaxLead && policy.adjusts_at(h); ++h) {
              const auto events = raft::step_clock(std::span(&live, 1), data, cycle.init_instant() + h, model);
              for (const auto& ev : events) {
                if (ev.kind == raft::StepEvent::Kind::Adjusted) {
                  record.adjustments[slot(ev.target_lead)].push_back(
                      {h, ev.predictor_lead, *live.adjusted[slot(ev.target_lead)]});
                } else if (ev.kind != raft::StepEvent::Kind::Skipped) {
                  ++missing_obs;
                }
              }
            }
          }
        }
        out.push_back(std::move(record));
      }
    }
    if (missing_obs > 0) {
      notes.push_back(id + ": " + std::to_string(missing_obs) + " RAFT steps without an observed error");
    }
  });

  std::vector<std::size_t> order(stations.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return stations[a].id < stations[b].id; });
  CycleLedger ledger;
  for (auto s : order) {
    for (auto& r : per_station[s]) ledger.append(std::move(r));
    if (log) log->messages.insert(log->messages.end(), messages[s].begin(), messages[s].end());
  }
  return ledger;
}

void write_ledger_csv(const std::filesystem::path& path, const CycleLedger& ledger) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << kLedgerHeader << '\n';
  for (const auto& r : ledger.records()) {
    const std::string prefix =
        r.station + ',' + format_date(r.cycle.date()) + ',' + std::to_string(r.cycle.init_hour()) + ',';
    for (int l = 1; l <= kMaxLead; ++l) {
      const auto& base = r.emos[slot(l)];
      if (!base) continue;
      const auto& obs = r.obs[slot(l)];
      const std::string tail =
          ',' + csv::format_number(base->sigma2) + ',' + (obs ? csv::format_number(*obs) : std::string{}) + '\n';
      out << prefix << l << ",0,EMOS,," << csv::format_number(base->mu) << tail;
      for (const auto& e : r.adjustments[slot(l)]) {
        out << prefix << l << ',' << e.hour << ",RAFT," << e.predictor_lead << ',' << csv::format_number(e.mu_hat)
            << tail;
      }
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

CycleLedger read_ledger_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(path.string(), "replay");
  std::string line;
  std::getline(in, line);
  csv::strip_cr(line);
  if (line != kLedgerHeader) throw DataError(path.string() + ": unexpected header '" + line + "'");

  CycleLedger ledger;
  std::optional<CycleRecord> current;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    csv::strip_cr(line);
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 10) {
      throw DataError(path.string() + " row " + std::to_string(row) + ": expected 10 fields, got " +
                      std::to_string(f.size()));
    }
    try {
      const std::string station(f[0]);
      const CycleTime cycle(parse_date(f[1]), csv::parse_int(f[2]));
      const int lead = LeadTime(csv::parse_int(f[3])).hours();
      const int hour = csv::parse_int(f[4]);
      const double mu = csv::parse_double(f[7]);
      const double sigma2 = csv::parse_double(f[8]);
      if (!current || current->station != station || current->cycle != cycle) {
        if (current) ledger.append(std::move(*current));
        current.emplace(station, cycle);
      }
      if (f[5] == "EMOS") {
        if (hour != 0 || !f[6].empty()) throw DataError("EMOS rows are issued at hour 0 without a predictor");
        current->emos[slot(lead)] = emos::GaussianForecast{mu, sigma2};
        if (!f[9].empty()) current->obs[slot(lead)] = csv::parse_double(f[9]);
      } else if (f[5] == "RAFT") {
        if (!current->emos[slot(lead)]) throw DataError("RAFT row before its EMOS row");
        current->adjustments[slot(lead)].push_back({hour, csv::parse_int(f[6]), mu});
      } else {
        throw DataError("unknown source '" + std::string(f[5]) + "'");
      }
    } catch (const Error& e) {
      throw DataError(path.string() + " row " + std::to_string(row) + ": " + e.what());
    }
  }
  if (current) ledger.append(std::move(*current));
  return ledger;
}

std::vector<verify::VerificationCase> cases_from_ledger(const CycleLedger& ledger, const Dataset& data,
                                                        const Snapshot& snapshot) {
  std::vector<verify::VerificationCase> cases;
  for (const auto& r : ledger.records()) {
    const auto site = data.has_station(r.station) ? data.station(r.station).site_type : SiteType::Inland;
    const auto* raw = data.forecast(r.station, r.cycle);
    for (int l = 1; l <= kMaxLead; ++l) {
      const auto& y = r.obs[slot(l)];
      const auto forecast = r.in_force(l, snapshot.hour_for(l));
      if (!y || !forecast) continue;
      verify::VerificationCase c;
      c.station = r.station;
      c.site_type = site;
      c.init_hour = r.cycle.init_hour();
      c.lead = l;
      c.valid = valid_time(r.cycle, LeadTime(l));
      c.y = *y;
      if (raw) c.members = raw->leads[slot(l)];
      c.emos = *r.emos[slot(l)];
      c.raft_mu = forecast->mu_hat;
      cases.push_back(std::move(c));
    }
  }
  return cases;
}

int most_recent_lead(int init_hour, int tod) {
  const int lead = ((tod - init_hour) % 24 + 24) % 24;
  return lead == 0 ? 24 : lead;
}

const RunScore* RunComparison::find(int init_hour, int tod) const {
  for (const auto& s : scores) {
    if (s.init_hour == init_hour && s.hour_of_day == tod) return &s;
  }
  return nullptr;
}

std::array<int, 24> RunComparison::selection(RunSelection rule) const {
  std::array<int, 24> out{};
  for (int tod = 0; tod < 24; ++tod) {
    int newest = kInitHours[0];
    for (int init : kInitHours) {
      if (most_recent_lead(init, tod) < most_recent_lead(newest, tod)) newest = init;
    }
    const auto& ranked = ranking[static_cast<std::size_t>(tod)];
    out[static_cast<std::size_t>(tod)] =
        rule == RunSelection::BestByTimeOfDay && !ranked.empty() ? ranked.front() : newest;
  }
  return out;
}

namespace {

double rmse_of(std::span<const double> sq, std::span<const std::size_t> idx) {
  double sum = 0.0;
  for (auto i : idx) sum += sq[i];
  return std::sqrt(sum / static_cast<double>(idx.size()));
}

}  // namespace

RunComparison run_comparison(std::span<const verify::VerificationCase> cases,
                             const verify::BootstrapOptions& bootstrap) {
  RunComparison out;
  for (int tod = 0; tod < 24; ++tod) {
    std::vector<std::pair<double, int>> ranked;
    for (int init : kInitHours) {
      const int lead = most_recent_lead(init, tod);
      std::vector<double> sq;
      for (const auto& c : cases) {
        if (c.init_hour == init && c.lead == lead) sq.push_back((c.raft_mu - c.y) * (c.raft_mu - c.y));
      }
      if (sq.empty()) continue;
      RunScore score{init, tod, lead, sq.size(), {}};
      score.rmse = verify::bootstrap_statistic(sq.size(), bootstrap.n_resamples, bootstrap.level, bootstrap.seed,
                                               [&](std::span<const std::size_t> idx) { return rmse_of(sq, idx); });
      ranked.emplace_back(score.rmse.mean, init);
      out.scores.push_back(score);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [_, init] : ranked) out.ranking[static_cast<std::size_t>(tod)].push_back(init);
  }
  return out;
}

RunComparison run_comparison(const CycleLedger& ledger, const verify::BootstrapOptions& bootstrap) {
  // Members are not needed for RMSE, so an empty dataset suffices.
  const auto cases = cases_from_ledger(ledger, Dataset{});
  return run_comparison(cases, bootstrap);
}

namespace {

/// Squared RAFT errors of runs a and b at the same station and valid time.
void matched_squared_errors(std::span<const verify::VerificationCase> cases, int hour_of_day, int init_a, int init_b,
                            std::vector<double>& a, std::vector<double>& b) {
  const int lead_a = most_recent_lead(init_a, hour_of_day);
  const int lead_b = most_recent_lead(init_b, hour_of_day);
  using Key = std::pair<std::string, Instant>;
  std::map<Key, double> sq_b;
  for (const auto& c : cases) {
    if (c.init_hour == init_b && c.lead == lead_b) sq_b[{c.station, c.valid}] = (c.raft_mu - c.y) * (c.raft_mu - c.y);
  }
  for (const auto& c : cases) {
    if (c.init_hour != init_a || c.lead != lead_a) continue;
    auto it = sq_b.find({c.station, c.valid});
    if (it == sq_b.end()) continue;
    a.push_back((c.raft_mu - c.y) * (c.raft_mu - c.y));
    b.push_back(it->second);
  }
}

}  // namespace

PairedDifference compare_runs(std::span<const verify::VerificationCase> cases, int hour_of_day, int init_a,
                              int init_b, const verify::BootstrapOptions& bootstrap) {
  std::vector<double> a;
  std::vector<double> b;
  matched_squared_errors(cases, hour_of_day, init_a, init_b, a, b);
  if (a.empty()) {
    throw DataError("no matched cases for runs " + std::to_string(init_a) + " and " + std::to_string(init_b) +
                    " at hour " + std::to_string(hour_of_day));
  }
  PairedDifference out{hour_of_day, init_a, init_b, a.size(), {}};
  out.difference = verify::bootstrap_statistic(
      a.size(), bootstrap.n_resamples, bootstrap.level, bootstrap.seed,
      [&](std::span<const std::size_t> idx) { return rmse_of(a, idx) - rmse_of(b, idx); });
  return out;
}

TransitionDifference transition_difference(std::span<const verify::VerificationCase> cases, int hours_after_init,
                                           const verify::BootstrapOptions& bootstrap) {
  if (hours_after_init < 1 || hours_after_init > 6) throw ConfigError("hours after init must be in [1, 6]");
  std::vector<double> a;
  std::vector<double> b;
  for (int init : kInitHours) {
    matched_squared_errors(cases, (init + hours_after_init) % 24, init, (init + 18) % 24, a, b);
  }
  if (a.empty()) throw DataError("no matched cases " + std::to_string(hours_after_init) + " hours after init");
  TransitionDifference out{hours_after_init, a.size(), {}};
  out.difference = verify::bootstrap_statistic(
      a.size(), bootstrap.n_resamples, bootstrap.level, bootstrap.seed,
      [&](std::span<const std::size_t> idx) { return rmse_of(a, idx) - rmse_of(b, idx); });
  return out;
}

}  // namespace traject::cycle
