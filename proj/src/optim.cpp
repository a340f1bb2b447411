#include "traject/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "traject/error.hpp"

namespace traject::optim {

MinimizeResult nelder_mead(const Objective& f, std::span<const double> x0,
                           const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw ConfigError("nelder_mead: empty parameter vector");
  if (options.initial_step.empty() ||
      (options.initial_step.size() != 1 && options.initial_step.size() != n)) {
    throw ConfigError("nelder_mead: initial_step must have 1 or n entries");
  }

  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  MinimizeResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isnan(v) ? HUGE_VAL : v;
  };

  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < n; ++i) {
    const double step = options.initial_step.size() == 1 ? options.initial_step[0] : options.initial_step[i];
    simplex[i + 1][i] += step;
  }
  std::vector<double> fx(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(simplex[i]);
  result.initial_value = fx[0];

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    // Stable so that ties resolve identically on every run.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
  };

  sort_simplex();
  while (true) {
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[n - 1];
    if (fx[worst] - fx[best] <= options.f_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& p = simplex[order[k]];
      for (std::size_t j = 0; j < n; ++j) centroid[j] += p[j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto& xw = simplex[worst];
    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + kReflect * (centroid[j] - xw[j]);
    const double fr = eval(xr);

    if (fr < fx[best]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + kExpand * (xr[j] - centroid[j]);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fx[worst] = fe;
      } else {
        simplex[worst] = xr;
        fx[worst] = fr;
      }
    } else if (fr < fx[second_worst]) {
      simplex[worst] = xr;
      fx[worst] = fr;
    } else {
      const bool outside = fr < fx[worst];
      const auto& target = outside ? xr : xw;
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + kContract * (target[j] - centroid[j]);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fx[worst])) {
        simplex[worst] = xc;
        fx[worst] = fc;
      } else {
        const auto xb = simplex[best];
        for (std::size_t k = 1; k <= n; ++k) {
          auto& p = simplex[order[k]];
          for (std::size_t j = 0; j < n; ++j) p[j] = xb[j] + kShrink * (p[j] - xb[j]);
          fx[order[k]] = eval(p);
        }
      }
    }
    sort_simplex();
  }

  result.x = simplex[order.front()];
  result.value = fx[order.front()];
  return result;
}

}  // namespace traject::optim
