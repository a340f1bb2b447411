#include "traject/emos.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "parallel.hpp"
#include "traject/error.hpp"
#include "traject/optim.hpp"
#include "traject/stats.hpp"

namespace traject::emos {

namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;  // 1 / sqrt(pi)
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double crps_unchecked(double mu, double sigma, double y) {
  const double z = (y - mu) / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - kInvSqrtPi);
}

EmosParams climatological_fallback(std::span<const TrainingPair> pairs) {
  EmosParams p;
  p.a = 0.0;
  p.b = 1.0;
  p.d = 0.0;
  p.c = 1.0;
  if (pairs.size() >= 2) {
    std::vector<double> err;
    err.reserve(pairs.size());
    for (const auto& tp : pairs) err.push_back(tp.y - tp.stats.mean);
    const double sd = std::sqrt(stats::sample_moments(err).variance);
    if (sd > 0.0) p.c = sd;
  }
  p.status = FitStatus::Climatological;
  p.iterations = 0;
  p.converged = true;
  return p;
}

bool is_successful(const EmosParams* p) {
  return p != nullptr && (p->status == FitStatus::Fitted || p->status == FitStatus::Reused);
}

/// One run's ensemble statistics and verifying observation for a cell.
struct CellSample {
  EnsembleStats stats;
  std::optional<double> y;
  Instant valid;
};

struct CellHistory {
  Date first{};
  std::vector<std::optional<CellSample>> by_day;  ///< indexed by days since `first`

  const std::optional<CellSample>* at(Date d) const {
    const auto idx = (d - first).count();
    if (idx < 0 || idx >= static_cast<long>(by_day.size())) return nullptr;
    return &by_day[static_cast<std::size_t>(idx)];
  }
};

CellHistory collect_history(const Dataset& data, const CellKey& cell) {
  CellHistory h;
  const auto& runs = data.forecasts(cell.station);
  if (runs.empty()) return h;
  h.first = runs.begin()->first.date();
  const Date last = runs.rbegin()->first.date();
  h.by_day.resize(static_cast<std::size_t>((last - h.first).count() + 1));
  const LeadTime lead{cell.lead};
  for (const auto& [cycle, fc] : runs) {
    if (cycle.init_hour() != cell.init_hour || !fc.at(lead)) continue;
    const Instant valid = valid_time(cycle, lead);
    h.by_day[static_cast<std::size_t>((cycle.date() - h.first).count())] =
        CellSample{ensemble_stats(fc, lead), data.observation(cell.station, valid), valid};
  }
  return h;
}

std::vector<TrainingPair> window_pairs(const CellHistory& h, const CellKey& cell, Date as_of) {
  std::vector<TrainingPair> pairs;
  pairs.reserve(kWindowDays);
  const Instant cutoff = instant_of(as_of, cell.init_hour);
  for (int back = kWindowDays; back >= 1; --back) {
    const auto* s = h.at(as_of - std::chrono::days{back});
    if (s == nullptr || !s->has_value()) continue;
    const auto& sample = **s;
    if (!sample.y || sample.valid > cutoff) continue;
    pairs.push_back({sample.stats, *sample.y});
  }
  return pairs;
}

EmosParams fit_on_pairs(std::span<const TrainingPair> pairs, const CellKey& cell, Date as_of,
                        const EmosParams* previous, const FitOptions& options) {
  EmosParams out;
  if (static_cast<int>(pairs.size()) >= options.min_pairs) {
    const EmosParams init = is_successful(previous) ? *previous : EmosParams{};
    out = fit_emos(pairs, init, options);
  } else if (is_successful(previous)) {
    out = *previous;
    out.status = FitStatus::Reused;
    out.iterations = 0;
    out.converged = true;
  } else {
    out = climatological_fallback(pairs);
  }
  out.cell = cell;
  out.n_train = static_cast<int>(pairs.size());
  out.window_begin = as_of - std::chrono::days{kWindowDays};
  out.window_end = as_of - std::chrono::days{1};
  out.as_of = as_of;
  return out;
}

}  // namespace

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::Fitted:
      return "fitted";
    case FitStatus::Reused:
      return "reused";
    case FitStatus::Climatological:
      return "climatological";
  }
  return "fitted";
}

FitStatus parse_fit_status(std::string_view text) {
  if (text == "fitted") return FitStatus::Fitted;
  if (text == "reused") return FitStatus::Reused;
  if (text == "climatological") return FitStatus::Climatological;
  throw DataError("unknown fit status '" + std::string(text) + "'");
}

double GaussianForecast::sigma() const { return std::sqrt(sigma2); }

double crps_gaussian(double mu, double sigma, double y) {
  if (!(sigma > 0.0)) throw ConfigError("crps_gaussian: sigma must be positive");
  return crps_unchecked(mu, sigma, y);
}

double mean_crps(double a, double b, double c, double d, std::span<const TrainingPair> pairs) {
  if (pairs.empty()) return 0.0;
  const double b2 = b * b;
  const double c2 = c * c;
  const double d2 = d * d;
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double mu = a + b2 * p.stats.mean;
    const double var = c2 + d2 * p.stats.variance;
    sum += var > 0.0 ? crps_unchecked(mu, std::sqrt(var), p.y) : std::fabs(p.y - mu);
  }
  return sum / static_cast<double>(pairs.size());
}

double mean_crps(const EmosParams& params, std::span<const TrainingPair> pairs) {
  return mean_crps(params.a, params.b, params.c, params.d, pairs);
}

EmosParams fit_emos(std::span<const TrainingPair> pairs, const EmosParams& init, const FitOptions& options) {
  if (static_cast<int>(pairs.size()) < options.min_pairs) {
    throw InsufficientDataError("fit_emos: " + std::to_string(pairs.size()) + " training pairs, need " +
                                std::to_string(options.min_pairs));
  }
  const std::array<double, 4> x0{init.a, init.b, init.c, init.d};
  optim::NelderMeadOptions nm;
  nm.f_tolerance = options.tolerance;
  nm.max_iterations = options.max_iterations;
  nm.initial_step = {options.initial_step};
  const auto result = optim::nelder_mead(
      [pairs](std::span<const double> x) { return mean_crps(x[0], x[1], x[2], x[3], pairs); }, x0, nm);

  EmosParams out = init;
  out.a = result.x[0];
  out.b = std::fabs(result.x[1]);
  out.c = std::fabs(result.x[2]);
  out.d = std::fabs(result.x[3]);
  if (out.c * out.c < kMinVarianceIntercept) out.c = std::sqrt(kMinVarianceIntercept);
  out.n_train = static_cast<int>(pairs.size());
  out.status = FitStatus::Fitted;
  out.iterations = result.iterations;
  out.converged = result.converged;
  return out;
}

GaussianForecast predict_emos(const EmosParams& params, const EnsembleStats& stats) {
  if (params.c == 0.0 && params.d == 0.0) {
    throw ConfigError("predict_emos: degenerate parameters with c = d = 0");
  }
  if (stats.variance < 0.0) throw DataError("predict_emos: negative ensemble variance");
  return {params.a + params.mean_slope() * stats.mean,
          params.variance_intercept() + params.variance_slope() * stats.variance};
}

std::vector<TrainingPair> training_window(const Dataset& data, const CellKey& cell, Date as_of) {
  const LeadTime lead{cell.lead};
  const Instant cutoff = instant_of(as_of, cell.init_hour);
  std::vector<TrainingPair> pairs;
  for (int back = kWindowDays; back >= 1; --back) {
    const CycleTime cycle{as_of - std::chrono::days{back}, cell.init_hour};
    const auto* fc = data.forecast(cell.station, cycle);
    if (fc == nullptr || !fc->at(lead)) continue;
    const Instant valid = valid_time(cycle, lead);
    if (valid > cutoff) continue;
    const auto y = data.observation(cell.station, valid);
    if (!y) continue;
    pairs.push_back({ensemble_stats(*fc, lead), *y});
  }
  return pairs;
}

EmosParams rolling_fit(const Dataset& data, const CellKey& cell, Date as_of, const EmosParams* previous,
                       const FitOptions& options) {
  const auto pairs = training_window(data, cell, as_of);
  return fit_on_pairs(pairs, cell, as_of, previous, options);
}

void EmosModel::add(EmosParams params) {
  if (!params.as_of) throw DataError("EmosModel::add: parameters without an as-of date");
  const Date d = *params.as_of;
  cells_[params.cell].insert_or_assign(d, std::move(params));
}

const EmosParams* EmosModel::find(const CellKey& cell, Date date) const {
  auto it = cells_.find(cell);
  if (it == cells_.end()) return nullptr;
  auto jt = it->second.find(date);
  return jt == it->second.end() ? nullptr : &jt->second;
}

std::size_t EmosModel::size() const {
  std::size_t n = 0;
  for (const auto& [k, m] : cells_) n += m.size();
  return n;
}

EmosModel fit_emos_model(const Dataset& data, Date first, Date last, int workers, const FitOptions& options,
                         std::span<const int> init_hours) {
  if (last < first) throw ConfigError("fit_emos_model: empty date range");
  require_init_hours(init_hours);
  std::vector<CellKey> cells;
  for (const auto& st : data.stations()) {
    for (int h : init_hours) {
      for (int l = 1; l <= kMaxLead; ++l) cells.push_back({st.id, h, l});
    }
  }
  std::vector<std::vector<EmosParams>> fitted(cells.size());
  detail::parallel_for(cells.size(), workers, [&](std::size_t i) {
    const auto& cell = cells[i];
    const auto history = collect_history(data, cell);
    const EmosParams* previous = nullptr;
    auto& out = fitted[i];
    out.reserve(static_cast<std::size_t>((last - first).count() + 1));
    for (Date d = first; d <= last; d += std::chrono::days{1}) {
      const auto pairs = window_pairs(history, cell, d);
      out.push_back(fit_on_pairs(pairs, cell, d, previous, options));
      previous = &out.back();
    }
  });
  EmosModel model;
  for (auto& per_cell : fitted) {
    for (auto& p : per_cell) model.add(std::move(p));
  }
  return model;
}

EmosForecastSet predict_all(const Dataset& data, const EmosModel& model) {
  EmosForecastSet out;
  for (const auto& st : data.stations()) {
    for (const auto& [cycle, fc] : data.forecasts(st.id)) {
      EmosTrajectory traj{};
      bool any = false;
      for (int l = 1; l <= kMaxLead; ++l) {
        const LeadTime lead{l};
        if (!fc.at(lead)) continue;
        const auto* params = model.find({st.id, cycle.init_hour(), l}, cycle.date());
        if (params == nullptr) continue;
        traj[lead.index()] = predict_emos(*params, ensemble_stats(fc, lead));
        any = true;
      }
      if (any) out.emplace(RunKey{st.id, cycle}, traj);
    }
  }
  return out;
}

}  // namespace traject::emos
