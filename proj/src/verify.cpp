#include "traject/verify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "csv.hpp"
#include "traject/error.hpp"
#include "traject/serialize.hpp"
#include "traject/stats.hpp"

namespace traject::verify {

namespace {

double percentile(std::span<const double> sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double rmse(std::span<const double> mean_forecasts, std::span<const double> observations) {
  if (mean_forecasts.size() != observations.size()) throw DataError("rmse: mismatched lengths");
  if (mean_forecasts.empty()) throw DataError("rmse: no cases");
  double ss = 0.0;
  for (std::size_t i = 0; i < mean_forecasts.size(); ++i) {
    const double e = mean_forecasts[i] - observations[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(mean_forecasts.size()));
}

double crps_ensemble(std::span<const double> members, double y) {
  if (members.empty()) throw DataError("crps_ensemble: no members");
  const auto m = static_cast<double>(members.size());
  std::vector<double> x(members.begin(), members.end());
  std::sort(x.begin(), x.end());
  double abs_obs = 0.0;
  double spread = 0.0;
  // sum_i sum_j |x_i - x_j| = 2 * sum_i (2i - m - 1) x_(i) over sorted members.
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_obs += std::fabs(x[i] - y);
    spread += (2.0 * static_cast<double>(i + 1) - m - 1.0) * x[i];
  }
  return abs_obs / m - spread / (m * m);
}

double pit(const emos::GaussianForecast& forecast, double y) {
  return stats::normal_cdf((y - forecast.mu) / forecast.sigma());
}

int rank(std::span<const double> members, double y, std::mt19937_64& rng) {
  int below = 0;
  int ties = 0;
  for (double x : members) {
    if (x < y) {
      ++below;
    } else if (x == y) {
      ++ties;
    }
  }
  if (ties > 0) below += std::uniform_int_distribution<int>(0, ties)(rng);
  return 1 + below;
}

Interval central_interval(const emos::GaussianForecast& forecast, double nominal) {
  if (!(nominal >= 0.0 && nominal <= 1.0)) throw ConfigError("central_interval: nominal outside [0, 1]");
  const double z = stats::normal_quantile(0.5 + 0.5 * nominal);
  const double half = z * forecast.sigma();
  return {forecast.mu - half, forecast.mu + half};
}

Interval envelope(std::span<const double> members) {
  if (members.empty()) throw DataError("envelope: no members");
  const auto [lo, hi] = std::minmax_element(members.begin(), members.end());
  return {*lo, *hi};
}

double coverage(std::span<const Interval> intervals, std::span<const double> observations) {
  if (intervals.size() != observations.size()) throw DataError("coverage: mismatched lengths");
  if (intervals.empty()) throw DataError("coverage: no cases");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) hits += intervals[i].contains(observations[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double skill_score(double score_model, double score_reference) {
  if (!(score_reference > 0.0)) throw ConfigError("skill_score: reference score must be positive");
  return 1.0 - score_model / score_reference;
}

BootstrapInterval bootstrap_statistic(std::size_t n_cases, int n_resamples, double level, std::uint64_t seed,
                                      const std::function<double(std::span<const std::size_t>)>& statistic) {
  if (n_cases < 2) throw DataError("bootstrap: need at least 2 cases");
  if (n_resamples < 1) throw ConfigError("bootstrap: need at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap: level outside (0, 1)");
  std::vector<std::size_t> idx(n_cases);
  for (std::size_t i = 0; i < n_cases; ++i) idx[i] = i;
  const double point = statistic(idx);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_cases - 1);
  std::vector<double> values(static_cast<std::size_t>(n_resamples));
  for (auto& v : values) {
    for (auto& i : idx) i = pick(rng);
    v = statistic(idx);
  }
  std::sort(values.begin(), values.end());
  BootstrapInterval ci{percentile(values, 0.5 * (1.0 - level)), point, percentile(values, 0.5 * (1.0 + level))};
  // The interval always brackets the point estimate.
  ci.low = std::min(ci.low, point);
  ci.high = std::max(ci.high, point);
  return ci;
}

BootstrapInterval bootstrap_ci(std::span<const double> case_scores, int n_resamples, double level,
                               std::uint64_t seed) {
  return bootstrap_statistic(case_scores.size(), n_resamples, level, seed,
                             [case_scores](std::span<const std::size_t> idx) {
                               double s = 0.0;
                               for (auto i : idx) s += case_scores[i];
                               return s / static_cast<double>(idx.size());
                             });
}

std::int64_t Histogram::total() const {
  std::int64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

Histogram rank_histogram(std::span<const int> ranks) {
  Histogram h{HistogramKind::Rank, std::vector<std::int64_t>(kRankBins, 0)};
  for (int r : ranks) {
    if (r < 1 || r > kRankBins) throw DataError("rank_histogram: rank " + std::to_string(r) + " out of range");
    ++h.counts[static_cast<std::size_t>(r - 1)];
  }
  return h;
}

Histogram pit_histogram(std::span<const double> pit_values, int bins) {
  if (bins < 1) throw ConfigError("pit_histogram: bins must be positive");
  Histogram h{HistogramKind::Pit, std::vector<std::int64_t>(static_cast<std::size_t>(bins), 0)};
  for (double u : pit_values) {
    const int b = std::clamp(static_cast<int>(std::floor(u * bins)), 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

double chi_square_uniform_pvalue(const Histogram& h) {
  const auto n = static_cast<double>(h.total());
  if (n <= 0.0 || h.counts.size() < 2) throw DataError("chi-square test: empty histogram");
  const double expected = n / static_cast<double>(h.counts.size());
  double chi2 = 0.0;
  for (auto c : h.counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return stats::chi_square_sf(chi2, static_cast<double>(h.counts.size() - 1));
}

double histogram_dispersion(const Histogram& h) {
  const auto n = static_cast<double>(h.total());
  if (n <= 0.0 || h.counts.size() < 2) throw DataError("histogram_dispersion: empty histogram");
  const double last = static_cast<double>(h.counts.size() - 1);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double p = static_cast<double>(h.counts[k]) / n;
    const double x = static_cast<double>(k) / last;
    m1 += p * x;
    m2 += p * x * x;
  }
  return m2 - m1 * m1;
}

std::string_view to_string(Season s) {
  switch (s) {
    case Season::DJF:
      return "DJF";
    case Season::MAM:
      return "MAM";
    case Season::JJA:
      return "JJA";
    case Season::SON:
      return "SON";
  }
  return "DJF";
}

Season parse_season(std::string_view text) {
  for (auto s : {Season::DJF, Season::MAM, Season::JJA, Season::SON}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown season '" + std::string(text) + "'");
}

Season season_of(Instant t) {
  const std::chrono::year_month_day ymd{date_of(t)};
  const unsigned month = static_cast<unsigned>(ymd.month());
  if (month == 12 || month <= 2) return Season::DJF;
  if (month <= 5) return Season::MAM;
  if (month <= 8) return Season::JJA;
  return Season::SON;
}

bool ScoreSlice::accepts(const VerificationCase& c) const {
  if (station && c.station != *station) return false;
  if (site_type && c.site_type != *site_type) return false;
  if (init_hour && c.init_hour != *init_hour) return false;
  if (lead_min && c.lead < *lead_min) return false;
  if (lead_max && c.lead > *lead_max) return false;
  if (season && season_of(c.valid) != *season) return false;
  if (hour_of_day && traject::hour_of_day(c.valid) != *hour_of_day) return false;
  return true;
}

std::string ScoreSlice::describe() const {
  std::vector<std::string> parts;
  if (station) parts.push_back("station=" + *station);
  if (site_type) parts.push_back("site_type=" + std::string(to_string(*site_type)));
  if (init_hour) parts.push_back("init_hour=" + std::to_string(*init_hour));
  if (lead_min || lead_max) {
    const int lo = lead_min.value_or(1);
    const int hi = lead_max.value_or(kMaxLead);
    parts.push_back("lead=" + (lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi)));
  }
  if (season) parts.push_back("season=" + std::string(to_string(*season)));
  if (hour_of_day) parts.push_back("hour=" + std::to_string(*hour_of_day));
  if (parts.empty()) return "all";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += ";" + parts[i];
  return out;
}

ScoreSlice ScoreSlice::parse(std::string_view text) {
  ScoreSlice s;
  if (text.empty() || text == "all") return s;
  try {
    for (auto part : csv::split_on(text, ';')) {
      const auto eq = part.find('=');
      if (eq == std::string_view::npos) throw ConfigError("slice term '" + std::string(part) + "' lacks '='");
      const auto key = part.substr(0, eq);
      const auto value = part.substr(eq + 1);
      if (key == "station") {
        s.station = std::string(value);
      } else if (key == "site_type") {
        s.site_type = parse_site_type(value);
      } else if (key == "init_hour") {
        s.init_hour = csv::parse_int(value);
      } else if (key == "lead") {
        const auto dash = value.find('-');
        if (dash == std::string_view::npos) {
          s.lead_min = s.lead_max = csv::parse_int(value);
        } else {
          s.lead_min = csv::parse_int(value.substr(0, dash));
          s.lead_max = csv::parse_int(value.substr(dash + 1));
        }
      } else if (key == "season") {
        s.season = parse_season(value);
      } else if (key == "hour") {
        s.hour_of_day = csv::parse_int(value);
      } else {
        throw ConfigError("unknown slice key '" + std::string(key) + "'");
      }
    }
  } catch (const DataError& e) {
    throw ConfigError(std::string("invalid slice: ") + e.what());
  }
  return s;
}

ScoreSlice ScoreSlice::lead_band(int lo, int hi) {
  ScoreSlice s;
  s.lead_min = lo;
  s.lead_max = hi;
  return s;
}

std::string Metric::name() const {
  std::string out = kind == MetricKind::Rmse ? "rmse" : kind == MetricKind::Crps ? "crps" : "coverage";
  out += system == System::Raw ? "_raw" : system == System::Emos ? "_emos" : "_raft";
  return out;
}

Metric Metric::parse(std::string_view text) {
  for (auto k : {MetricKind::Rmse, MetricKind::Crps, MetricKind::Coverage}) {
    for (auto s : {System::Raw, System::Emos, System::Raft}) {
      const Metric m{k, s};
      if (m.name() == text) return m;
    }
  }
  throw ConfigError("unknown metric '" + std::string(text) + "'");
}

double case_score(const VerificationCase& c, Metric metric) {
  if (metric.system == System::Raw) {
    if (!c.members) throw DataError("raw-ensemble metric for a case without members");
    const std::span<const double> m(*c.members);
    switch (metric.kind) {
      case MetricKind::Rmse: {
        const double e = ensemble_stats(m).mean - c.y;
        return e * e;
      }
      case MetricKind::Crps:
        return crps_ensemble(m, c.y);
      case MetricKind::Coverage:
        return envelope(m).contains(c.y) ? 1.0 : 0.0;
    }
  }
  const emos::GaussianForecast f{metric.system == System::Raft ? c.raft_mu : c.emos.mu, c.emos.sigma2};
  switch (metric.kind) {
    case MetricKind::Rmse:
      return (f.mu - c.y) * (f.mu - c.y);
    case MetricKind::Crps:
      return emos::crps_gaussian(f.mu, f.sigma(), c.y);
    case MetricKind::Coverage:
      return central_interval(f, kEnvelopeNominal).contains(c.y) ? 1.0 : 0.0;
  }
  return 0.0;
}

double reduce(MetricKind kind, double mean_case_score) {
  return kind == MetricKind::Rmse ? std::sqrt(mean_case_score) : mean_case_score;
}

VerificationReport aggregate(std::span<const VerificationCase> cases, const ScoreSlice& slice, Metric metric,
                             const std::optional<BootstrapOptions>& bootstrap) {
  std::vector<double> scores;
  for (const auto& c : cases) {
    if (slice.accepts(c)) scores.push_back(case_score(c, metric));
  }
  if (scores.empty()) throw DataError("aggregate: no cases in slice '" + slice.describe() + "'");
  double sum = 0.0;
  for (double s : scores) sum += s;
  VerificationReport report{metric, slice, scores.size(), reduce(metric.kind, sum / static_cast<double>(scores.size())),
                            std::nullopt, {}};
  if (bootstrap && scores.size() >= 2) {
    auto ci = bootstrap_ci(scores, bootstrap->n_resamples, bootstrap->level, bootstrap->seed);
    report.ci = BootstrapInterval{reduce(metric.kind, ci.low), report.value, reduce(metric.kind, ci.high)};
  }
  return report;
}

void write_reports(const std::filesystem::path& json_path, const std::filesystem::path& csv_path,
                   std::span<const VerificationReport> reports) {
  write_json_file(json_path, to_json(reports));
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "panel,metric,slice,n,value,ci_low,ci_high\n";
  for (const auto& r : reports) {
    out << r.panel << ',' << r.metric.name() << ',' << r.slice.describe() << ',' << r.n << ',' << csv::format_number(r.value) << ','
        << (r.ci ? csv::format_number(r.ci->low) : "") << ',' << (r.ci ? csv::format_number(r.ci->high) : "")
        << '\n';
  }
}

void write_histogram_csv(const std::filesystem::path& path, std::span<const LabeledHistogram> histograms) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "label,kind,bin,count\n";
  for (const auto& [label, h] : histograms) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out << label << ',' << (h.kind == HistogramKind::Rank ? "rank" : "pit") << ',' << i + 1 << ','
          << h.counts[i] << '\n';
    }
  }
}

}  // namespace traject::verify
