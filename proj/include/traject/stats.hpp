#pragma once

// Distribution functions and classical tests used across modules.

#include <span>

namespace traject::stats {

double normal_pdf(double z);
double normal_cdf(double z);
double normal_quantile(double p);

/// Two-sided p-value of a t statistic with `dof` degrees of freedom.
double students_t_two_sided_p(double t, double dof);

/// Upper tail probability of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// Kolmogorov-Smirnov statistic of a sample against U(0, 1).
double ks_statistic_uniform(std::span<const double> sample);
/// Asymptotic p-value of the one-sample KS test against U(0, 1).
double ks_uniform_pvalue(std::span<const double> sample);

struct Moments {
  double mean{};
  double variance{};  ///< divisor n - 1
};

Moments sample_moments(std::span<const double> x);

/// Pearson correlation; NaN when either series has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace traject::stats
