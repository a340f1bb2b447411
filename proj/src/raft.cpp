#include "traject/raft.hpp"

#include <cmath>

#include "parallel.hpp"
#include "traject/error.hpp"
#include "traject/stats.hpp"

namespace traject::raft {

namespace {

struct Tier {
  int nearest;   // smallest offset l - l*
  int farthest;  // largest offset
  double level;
  PeriodRule rule;
};

constexpr std::array<Tier, 3> kTiers{{
    {2, 11, 0.90, PeriodRule::Tier90},
    {12, 19, 0.95, PeriodRule::Tier95},
    {20, 23, 0.99, PeriodRule::Tier99},
}};

constexpr int kMinRegressionPairs = 3;

std::pair<std::optional<int>, PeriodRule> tiered_search(const CellLinks& links, int target_lead) {
  const auto it = links.find(target_lead);
  for (const auto& tier : kTiers) {
    // Backwards in time: from the predictor closest to the target outwards.
    for (int offset = tier.nearest; offset <= tier.farthest; ++offset) {
      const int predictor = target_lead - offset;
      const RaftLink* link = nullptr;
      if (it != links.end()) {
        auto jt = it->second.find(predictor);
        if (jt != it->second.end()) link = &jt->second;
      }
      if (link == nullptr || !link->significant(tier.level)) return {offset, tier.rule};
    }
  }
  return {std::nullopt, PeriodRule::Maximum};
}

}  // namespace

std::optional<double> forecast_error(std::optional<double> observation, double emos_mean) {
  if (!observation) return std::nullopt;
  return *observation - emos_mean;
}

void TrainingErrors::set(Date date, int lead, std::optional<double> error) {
  LeadTime lt{lead};
  rows_[date][lt.index()] = error;
}

std::optional<double> TrainingErrors::at(Date date, int lead) const {
  if (lead <= 0) {
    date -= std::chrono::days{1};
    lead += 24;
  }
  if (lead < 1 || lead > kMaxLead) return std::nullopt;
  auto it = rows_.find(date);
  if (it == rows_.end()) return std::nullopt;
  return it->second[static_cast<std::size_t>(lead - 1)];
}

TrainingErrors collect_training_errors(const Dataset& data, const emos::EmosForecastSet& emos, const CellKey& cell,
                                       Date first, Date last) {
  TrainingErrors errors{cell.station, cell.init_hour};
  errors.set_first_target(first);
  for (Date d = first - std::chrono::days{1}; d <= last; d += std::chrono::days{1}) {
    const CycleTime cycle{d, cell.init_hour};
    auto it = emos.find(emos::RunKey{cell.station, cycle});
    if (it == emos.end()) continue;
    for (int l = 1; l <= kMaxLead; ++l) {
      const LeadTime lead{l};
      const auto& gf = it->second[lead.index()];
      if (!gf) continue;
      errors.set(d, l, forecast_error(data.observation(cell.station, valid_time(cycle, lead)), gf->mu));
    }
  }
  return errors;
}

CorrelationMatrix CorrelationMatrix::masked(double level) const {
  CorrelationMatrix out;
  for (std::size_t i = 0; i < kMaxLead; ++i) {
    for (std::size_t j = 0; j < kMaxLead; ++j) {
      const auto& e = entries[i][j];
      if (e && e->p_value < 1.0 - level) out.entries[i][j] = e;
    }
  }
  return out;
}

CorrelationMatrix error_correlation_matrix(const TrainingErrors& errors) {
  CorrelationMatrix m;
  std::vector<double> x, y;
  for (int l1 = 1; l1 <= kMaxLead; ++l1) {
    for (int l2 = l1; l2 <= kMaxLead; ++l2) {
      x.clear();
      y.clear();
      for (const auto& [date, row] : errors.rows()) {
        if (!errors.is_target(date)) continue;
        const auto& a = row[static_cast<std::size_t>(l1 - 1)];
        const auto& b = row[static_cast<std::size_t>(l2 - 1)];
        if (a && b) {
          x.push_back(*a);
          y.push_back(*b);
        }
      }
      const int n = static_cast<int>(x.size());
      std::optional<CorrelationEntry> entry;
      if (l1 == l2) {
        if (n >= 1) entry = CorrelationEntry{1.0, 0.0, n};
      } else if (n >= kMinRegressionPairs) {
        const double r = stats::pearson(x, y);
        if (std::isfinite(r)) {
          const double dof = n - 2.0;
          const double t = std::fabs(r) >= 1.0 ? HUGE_VAL : r * std::sqrt(dof / (1.0 - r * r));
          entry = CorrelationEntry{r, stats::students_t_two_sided_p(t, dof), n};
        }
      }
      m.entries[static_cast<std::size_t>(l1 - 1)][static_cast<std::size_t>(l2 - 1)] = entry;
      m.entries[static_cast<std::size_t>(l2 - 1)][static_cast<std::size_t>(l1 - 1)] = entry;
    }
  }
  return m;
}

RaftLink fit_link(std::span<const double> predictor, std::span<const double> target, int target_lead,
                  int predictor_lead) {
  if (predictor.size() != target.size()) throw DataError("fit_link: predictor and target lengths differ");
  RaftLink link;
  link.target_lead = target_lead;
  link.predictor_lead = predictor_lead;
  link.n_train = static_cast<int>(predictor.size());
  if (link.n_train < kMinRegressionPairs) return link;

  const double n = static_cast<double>(predictor.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < predictor.size(); ++i) {
    mx += predictor[i];
    my += target[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < predictor.size(); ++i) {
    sxx += (predictor[i] - mx) * (predictor[i] - mx);
    sxy += (predictor[i] - mx) * (target[i] - my);
  }
  if (!(sxx > 1e-12 * n)) return link;

  link.beta = sxy / sxx;
  link.alpha = my - link.beta * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < predictor.size(); ++i) {
    const double r = target[i] - link.alpha - link.beta * predictor[i];
    rss += r * r;
  }
  const double dof = n - 2.0;
  link.residual_sd = dof > 0.0 ? std::sqrt(rss / dof) : 0.0;
  if (dof <= 0.0) {
    link.p_value = 1.0;
  } else {
    const double se = std::sqrt(rss / dof / sxx);
    if (se > 0.0) {
      link.p_value = stats::students_t_two_sided_p(link.beta / se, dof);
    } else {
      link.p_value = link.beta != 0.0 ? 0.0 : 1.0;
    }
  }
  link.usable = std::isfinite(link.alpha) && std::isfinite(link.beta);
  return link;
}

RaftLink fit_link(const TrainingErrors& errors, int target_lead, int predictor_lead) {
  std::vector<double> x, y;
  for (const auto& [date, row] : errors.rows()) {
    if (!errors.is_target(date)) continue;
    const auto& e = row[static_cast<std::size_t>(target_lead - 1)];
    if (!e) continue;
    const auto p = errors.at(date, predictor_lead);
    if (!p) continue;
    x.push_back(*p);
    y.push_back(*e);
  }
  return fit_link(x, y, target_lead, predictor_lead);
}

std::string_view to_string(PeriodRule rule) {
  switch (rule) {
    case PeriodRule::Tier90:
      return "tier90";
    case PeriodRule::Tier95:
      return "tier95";
    case PeriodRule::Tier99:
      return "tier99";
    case PeriodRule::NeighbourAverage:
      return "neighbour_average";
    case PeriodRule::Maximum:
      return "maximum";
  }
  return "maximum";
}

PeriodRule parse_period_rule(std::string_view text) {
  for (auto r : {PeriodRule::Tier90, PeriodRule::Tier95, PeriodRule::Tier99, PeriodRule::NeighbourAverage,
                 PeriodRule::Maximum}) {
    if (to_string(r) == text) return r;
  }
  throw DataError("unknown period rule '" + std::string(text) + "'");
}

const RaftLink* AdjustmentPlan::link_for(int predictor_lead) const {
  auto it = links.find(predictor_lead);
  return it == links.end() ? nullptr : &it->second;
}

CellLinks fit_cell_links(const TrainingErrors& errors) {
  CellLinks links;
  for (int l = 1; l <= kMaxLead; ++l) {
    auto& per_target = links[l];
    for (int offset = kMinPredictorOffset; offset <= kMaxPredictorOffset; ++offset) {
      per_target.emplace(l - offset, fit_link(errors, l, l - offset));
    }
  }
  return links;
}

std::optional<int> search_period(const CellLinks& links, int target_lead) {
  return tiered_search(links, target_lead).first;
}

AdjustmentPlan select_adjustment_period(const CellLinks& links, int target_lead, const CellKey& cell) {
  LeadTime checked{target_lead};
  AdjustmentPlan plan;
  plan.station = cell.station;
  plan.init_hour = cell.init_hour;
  plan.target_lead = checked.hours();

  auto [found, rule] = tiered_search(links, target_lead);
  if (found) {
    plan.period = *found;
    plan.rule = rule;
  } else {
    const auto before = target_lead > 1 ? search_period(links, target_lead - 1) : std::nullopt;
    const auto after = target_lead < kMaxLead ? search_period(links, target_lead + 1) : std::nullopt;
    if (before && after) {
      // Half-hours round up.
      plan.period = (*before + *after + 1) / 2;
      plan.rule = PeriodRule::NeighbourAverage;
    } else {
      plan.period = kMaxPeriod;
      plan.rule = PeriodRule::Maximum;
    }
  }
  plan.period = std::clamp(plan.period, kMinPredictorOffset, kMaxPeriod);

  const auto it = links.find(target_lead);
  for (int predictor = plan.earliest_predictor(); predictor <= plan.latest_predictor(); ++predictor) {
    RaftLink link;
    link.target_lead = target_lead;
    link.predictor_lead = predictor;
    if (it != links.end()) {
      auto jt = it->second.find(predictor);
      if (jt != it->second.end()) link = jt->second;
    }
    plan.links.emplace(predictor, link);
  }
  return plan;
}

void RaftModel::set(const CellKey& cell, CellPlans plans) { cells_.insert_or_assign(cell, std::move(plans)); }

const CellPlans* RaftModel::find(const CellKey& cell) const {
  auto it = cells_.find(cell);
  return it == cells_.end() ? nullptr : &it->second;
}

const AdjustmentPlan* RaftModel::plan(const CellKey& cell, int target_lead) const {
  const auto* plans = find(cell);
  if (plans == nullptr || target_lead < 1 || target_lead > kMaxLead) return nullptr;
  return &(*plans)[static_cast<std::size_t>(target_lead - 1)];
}

RaftModel train_raft(const Dataset& data, const emos::EmosForecastSet& emos, Date first, Date last, int workers,
                     std::span<const int> init_hours) {
  if (last < first) throw ConfigError("train_raft: empty training range");
  require_init_hours(init_hours);
  std::vector<CellKey> cells;
  for (const auto& st : data.stations()) {
    for (int h : init_hours) cells.push_back({st.id, h});
  }
  std::vector<CellPlans> plans(cells.size());
  detail::parallel_for(cells.size(), workers, [&](std::size_t i) {
    const auto errors = collect_training_errors(data, emos, cells[i], first, last);
    const auto links = fit_cell_links(errors);
    for (int l = 1; l <= kMaxLead; ++l) {
      plans[i][static_cast<std::size_t>(l - 1)] = select_adjustment_period(links, l, cells[i]);
    }
  });
  RaftModel model;
  for (std::size_t i = 0; i < cells.size(); ++i) model.set(cells[i], std::move(plans[i]));
  return model;
}

LiveTrajectory::LiveTrajectory(std::string station_id, CycleTime run, emos::EmosTrajectory emos,
                               std::optional<emos::EmosTrajectory> previous)
    : station(std::move(station_id)), cycle(run), base(emos), previous_day(std::move(previous)) {}

std::optional<double> LiveTrajectory::current_mean(int lead) const {
  const LeadTime lt{lead};
  if (adjusted[lt.index()]) return adjusted[lt.index()];
  if (base[lt.index()]) return base[lt.index()]->mu;
  return std::nullopt;
}

std::optional<double> LiveTrajectory::reference_mean(int predictor_lead) const {
  if (predictor_lead >= 1 && predictor_lead <= kMaxLead) {
    const auto& gf = base[static_cast<std::size_t>(predictor_lead - 1)];
    return gf ? std::optional<double>(gf->mu) : std::nullopt;
  }
  const int lead = predictor_lead + 24;
  if (!previous_day || lead < 1 || lead > kMaxLead) return std::nullopt;
  const auto& gf = (*previous_day)[static_cast<std::size_t>(lead - 1)];
  return gf ? std::optional<double>(gf->mu) : std::nullopt;
}

std::optional<double> observed_error(const LiveTrajectory& live, int predictor_lead,
                                     std::optional<double> observation) {
  // Deliberately never reads live.adjusted: errors are EMOS errors.
  const auto mu = live.reference_mean(predictor_lead);
  if (!mu) return std::nullopt;
  return forecast_error(observation, *mu);
}

AdjustOutcome apply_adjustment(LiveTrajectory& live, int predictor_lead, double error, const AdjustmentPlan& plan) {
  if (!plan.covers(predictor_lead)) return AdjustOutcome::OutsidePlan;
  const auto* link = plan.link_for(predictor_lead);
  if (link == nullptr || !link->usable) return AdjustOutcome::UnusableLink;
  const LeadTime target{plan.target_lead};
  const auto& gf = live.base[target.index()];
  if (!gf) return AdjustOutcome::MissingBase;
  live.adjusted[target.index()] = gf->mu + link->predict(error);
  live.predictor_used[target.index()] = predictor_lead;
  return AdjustOutcome::Applied;
}

std::vector<StepEvent> step_clock(std::span<LiveTrajectory> live, const Dataset& observations, Instant now,
                                  const RaftModel& model) {
  std::vector<StepEvent> events;
  for (auto& traj : live) {
    const auto hour = static_cast<int>(now - traj.cycle.init_instant());
    if (hour < 0 || hour >= kMaxLead) continue;
    const auto* plans = model.find({traj.station, traj.cycle.init_hour()});
    if (plans == nullptr) continue;
    const int predictor = hour - kProcessingDelay;
    const int lo = std::max(1, predictor + kMinPredictorOffset);
    const int hi = std::min(kMaxLead, predictor + kMaxPeriod);
    std::vector<const AdjustmentPlan*> due;
    for (int l = lo; l <= hi; ++l) {
      const auto& plan = (*plans)[static_cast<std::size_t>(l - 1)];
      if (plan.covers(predictor)) due.push_back(&plan);
    }
    if (due.empty()) continue;

    auto event = [&](int target, StepEvent::Kind kind) {
      events.push_back({traj.station, traj.cycle, hour, target, predictor, kind});
    };
    if (!traj.reference_mean(predictor)) {
      event(0, StepEvent::Kind::MissingReference);
      continue;
    }
    const auto y = observations.observation(traj.station, traj.cycle.init_instant() + predictor);
    const auto err = observed_error(traj, predictor, y);
    if (!err) {
      event(0, StepEvent::Kind::MissingObservation);
      continue;
    }
    for (const auto* plan : due) {
      const auto outcome = apply_adjustment(traj, predictor, *err, *plan);
      event(plan->target_lead,
            outcome == AdjustOutcome::Applied ? StepEvent::Kind::Adjusted : StepEvent::Kind::Skipped);
    }
  }
  return events;
}

}  // namespace traject::raft
