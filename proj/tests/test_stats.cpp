#include <random>

#include "doctest.h"
#include "traject/optim.hpp"
#include "traject/stats.hpp"

using namespace traject;

TEST_SUITE("stats") {
  TEST_CASE("normal distribution values") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(stats::normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  }

  TEST_CASE("t and chi-square tail probabilities match tabulated values") {
    // t(10) two-sided 5% critical value 2.228139
    CHECK(stats::students_t_two_sided_p(2.228138851986, 10) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(stats::students_t_two_sided_p(-2.228138851986, 10) == doctest::Approx(0.05).epsilon(1e-9));
    // chi-square(12) upper 5% point 21.02607
    CHECK(stats::chi_square_sf(21.02606981748307, 12) == doctest::Approx(0.05).epsilon(1e-9));
  }

  TEST_CASE("KS test accepts uniform and rejects skewed samples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> flat(2000);
    std::vector<double> skew(2000);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      flat[i] = u(rng);
      skew[i] = flat[i] * flat[i];
    }
    CHECK(stats::ks_uniform_pvalue(flat) > 0.05);
    CHECK(stats::ks_uniform_pvalue(skew) < 1e-6);
    const std::array<double, 2> two{0.25, 0.75};
    CHECK(stats::ks_statistic_uniform(two) == doctest::Approx(0.25));
  }

  TEST_CASE("moments and correlation") {
    const std::array<double, 4> x{1, 2, 3, 4};
    const std::array<double, 4> y{2, 4, 6, 8};
    const std::array<double, 4> c{5, 5, 5, 5};
    CHECK(stats::sample_moments(x).variance == doctest::Approx(5.0 / 3.0));
    CHECK(stats::pearson(x, y) == doctest::Approx(1.0));
    CHECK(std::isnan(stats::pearson(x, c)));
  }
}

TEST_SUITE("optim") {
  TEST_CASE("Nelder-Mead finds the minimum of a shifted quadratic") {
    auto f = [](std::span<const double> v) { return (v[0] - 1.0) * (v[0] - 1.0) + 3.0 * (v[1] + 2.0) * (v[1] + 2.0); };
    const std::array<double, 2> x0{0.0, 0.0};
    optim::NelderMeadOptions opts;
    opts.f_tolerance = 1e-14;
    opts.max_iterations = 2000;
    const auto r = optim::nelder_mead(f, x0, opts);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-4));
    CHECK(r.value <= r.initial_value);
  }

  TEST_CASE("Nelder-Mead solves Rosenbrock and reports iteration limits") {
    auto rosen = [](std::span<const double> v) {
      return 100.0 * (v[1] - v[0] * v[0]) * (v[1] - v[0] * v[0]) + (1.0 - v[0]) * (1.0 - v[0]);
    };
    const std::array<double, 2> x0{-1.2, 1.0};
    optim::NelderMeadOptions opts;
    opts.f_tolerance = 1e-16;
    opts.max_iterations = 5000;
    const auto r = optim::nelder_mead(rosen, x0, opts);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));
    opts.max_iterations = 3;
    const auto short_run = optim::nelder_mead(rosen, x0, opts);
    CHECK_FALSE(short_run.converged);
    CHECK(short_run.iterations == 3);
  }

  TEST_CASE("non-finite objective values are treated as worst") {
    // log of a negative argument is NaN; the minimum of x - log(x) is at 1
    auto f = [](std::span<const double> v) { return v[0] - std::log(v[0]); };
    const std::array<double, 1> x0{0.05};
    optim::NelderMeadOptions opts;
    opts.initial_step = {-0.2};
    const auto r = optim::nelder_mead(f, x0, opts);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
  }
}
