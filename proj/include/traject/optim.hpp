#pragma once

#include <functional>
#include <span>
#include <vector>

namespace traject::optim {

struct NelderMeadOptions {
  /// Stop once the objective spread across the simplex falls below this.
  double f_tolerance{1e-8};
  int max_iterations{500};
  /// Per-coordinate offsets for the initial simplex; a single value is
  /// broadcast to every coordinate.
  std::vector<double> initial_step{0.1};
};

struct MinimizeResult {
  std::vector<double> x;
  double value{};
  double initial_value{};
  int iterations{};
  int evaluations{};
  bool converged{};
};

using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free simplex minimisation (standard reflection, expansion,
/// contraction and shrink coefficients 1, 2, 1/2, 1/2).
MinimizeResult nelder_mead(const Objective& f, std::span<const double> x0,
                           const NelderMeadOptions& options = {});

}  // namespace traject::optim
