#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "traject/cycle.hpp"
#include "traject/emos.hpp"
#include "traject/ingest.hpp"
#include "traject/raft.hpp"

namespace traject::testing {

/// A few stations, a short training year and a short test range.
inline ingest::SyntheticConfig small_config(std::uint64_t seed = 7) {
  ingest::SyntheticConfig c;
  c.seed = seed;
  c.n_stations = 2;
  c.n_days = 110;
  c.spinup_days = 40;
  c.training_days = 45;
  return c;
}

/// Small dataset carried through EMOS, RAFT training and a full replay for
/// one init hour. Built once per test binary.
struct Pipeline {
  ingest::SyntheticDataset synthetic;
  emos::EmosModel emos_model;
  emos::EmosForecastSet emos;
  raft::RaftModel raft;
  cycle::CycleLedger ledger;
  std::vector<int> init_hours;
};

inline const Pipeline& small_pipeline() {
  static const Pipeline p = [] {
    Pipeline out;
    out.init_hours = {3, 9};
    out.synthetic = ingest::generate_synthetic(small_config());
    const auto& m = out.synthetic.manifest;
    out.emos_model = emos::fit_emos_model(out.synthetic.data, m.training_range.first - std::chrono::days{1},
                                          m.test_range.last, 4, {}, out.init_hours);
    out.emos = emos::predict_all(out.synthetic.data, out.emos_model);
    out.raft = raft::train_raft(out.synthetic.data, out.emos, m.training_range.first, m.training_range.last, 4,
                                out.init_hours);
    out.ledger = cycle::replay(out.synthetic.data, out.emos, out.raft, cycle::CyclePolicy::raft_full(),
                               m.test_range.first, m.test_range.last, 1, nullptr, out.init_hours);
    return out;
  }();
  return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("traject_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Composite Simpson rule on [a, b] with an even number of intervals.
template <class F>
double simpson(F&& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

/// Mean pairwise absolute difference by the plain double sum.
inline double crps_ensemble_double_sum(std::span<const double> x, double y) {
  const double m = static_cast<double>(x.size());
  double a = 0.0;
  double b = 0.0;
  for (double xi : x) {
    a += std::fabs(xi - y);
    for (double xj : x) b += std::fabs(xi - xj);
  }
  return a / m - b / (2.0 * m * m);
}

/// Integral of (F(x) - 1{x >= y})^2 for N(mu, sigma^2), split at y.
inline double crps_gaussian_integral(double mu, double sigma, double y) {
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
  const double lo = std::min(mu, y) - 14.0 * sigma;
  const double hi = std::max(mu, y) + 14.0 * sigma;
  const double below = simpson([&](double x) { return cdf(x) * cdf(x); }, lo, y, 40000);
  const double above = simpson([&](double x) { return (1.0 - cdf(x)) * (1.0 - cdf(x)); }, y, hi, 40000);
  return below + above;
}

}  // namespace traject::testing
