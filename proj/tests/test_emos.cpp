#include <random>

#include "doctest.h"
#include "support.hpp"
#include "traject/emos.hpp"
#include "traject/error.hpp"

using namespace traject;

namespace {

std::vector<emos::TrainingPair> planted_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> var(0.2, 3.0);
  std::vector<emos::TrainingPair> pairs(n);
  for (auto& p : pairs) {
    p.stats.mean = 5.0 * z(rng);
    p.stats.variance = var(rng);
    p.y = 2.0 + p.stats.mean + std::sqrt(1.0 + 0.5 * p.stats.variance) * z(rng);
  }
  return pairs;
}

}  // namespace

TEST_SUITE("emos") {
  TEST_CASE("Gaussian CRPS agrees with numerical integration") {
    for (double sigma : {0.3, 1.0, 2.5}) {
      for (double y : {-4.0, -0.5, 0.0, 1.7, 6.0}) {
        CHECK(std::fabs(emos::crps_gaussian(1.0, sigma, y) - testing::crps_gaussian_integral(1.0, sigma, y)) <
              1e-6);
      }
    }
    CHECK_THROWS_AS(emos::crps_gaussian(0.0, 0.0, 1.0), ConfigError);
  }

  TEST_CASE("CRPS at the mean equals sigma (sqrt2 - 1) / sqrt(pi)") {
    const double expected = 2.0 * (1.0 / std::sqrt(2.0 * std::numbers::pi) - 0.5 / std::sqrt(std::numbers::pi));
    CHECK(emos::crps_gaussian(0.0, 2.0, 0.0) == doctest::Approx(2.0 * expected));
  }

  TEST_CASE("minimum-CRPS fit recovers planted coefficients") {
    const auto pairs = planted_pairs(4000, 17);
    const auto p = emos::fit_emos(pairs);
    CHECK(p.status == emos::FitStatus::Fitted);
    CHECK(std::fabs(p.a - 2.0) < 0.1);
    CHECK(std::fabs(p.mean_slope() - 1.0) < 0.05);
    CHECK(std::fabs(p.variance_intercept() - 1.0) < 0.15);
    CHECK(std::fabs(p.variance_slope() - 0.5) < 0.15);
    CHECK(emos::mean_crps(p, pairs) <= emos::mean_crps(emos::EmosParams{}, pairs));
  }

  TEST_CASE("too few pairs is an insufficient-data error") {
    const auto pairs = planted_pairs(29, 1);
    CHECK_THROWS_AS(emos::fit_emos(pairs), InsufficientDataError);
  }

  TEST_CASE("variance intercept is floored") {
    std::vector<emos::TrainingPair> pairs;
    for (int i = 0; i < 60; ++i) {
      const double v = 0.5 + (i % 7) * 0.3;
      const double y = (i % 2 == 0 ? 1.0 : -1.0) * std::sqrt(v);
      pairs.push_back({{0.0, v}, y});
    }
    const auto p = emos::fit_emos(pairs);
    CHECK(p.variance_intercept() >= emos::kMinVarianceIntercept);
  }

  TEST_CASE("prediction rejects degenerate variance parameters") {
    emos::EmosParams p;
    p.c = 0.0;
    p.d = 0.0;
    CHECK_THROWS_AS(emos::predict_emos(p, {1.0, 1.0}), ConfigError);
    p.a = 1.0;
    p.b = 2.0;
    p.c = 0.5;
    p.d = 3.0;
    const auto f = emos::predict_emos(p, {2.0, 0.5});
    CHECK(f.mu == doctest::Approx(9.0));
    CHECK(f.sigma2 == doctest::Approx(0.25 + 4.5));
  }

  TEST_CASE("training window never uses observations after the init instant") {
    const auto s = ingest::generate_synthetic(testing::small_config());
    const Date as_of = s.manifest.training_range.first + std::chrono::days{3};
    for (int lead : {1, 21, 24, 25, 30, 36}) {
      const emos::CellKey cell{"S001", 21, lead};
      const auto pairs = emos::training_window(s.data, cell, as_of);
      // leads beyond 24 - (init offset) lose the most recent day
      const Instant cutoff = instant_of(as_of, 21);
      int expected = 0;
      for (int back = 1; back <= emos::kWindowDays; ++back) {
        const CycleTime c(as_of - std::chrono::days{back}, 21);
        const Instant v = valid_time(c, LeadTime(lead));
        if (v <= cutoff && s.data.observation("S001", v)) ++expected;
      }
      CHECK(static_cast<int>(pairs.size()) == expected);
      CHECK(pairs.size() <= static_cast<std::size_t>(lead > 24 ? 39 : 40));
    }
  }

  TEST_CASE("rolling fit falls back when the window is short") {
    const auto s = ingest::generate_synthetic(testing::small_config());
    const emos::CellKey cell{"S001", 3, 5};
    const Date early = s.manifest.cycles.front().date() + std::chrono::days{10};
    const auto clim = emos::rolling_fit(s.data, cell, early);
    CHECK(clim.status == emos::FitStatus::Climatological);
    CHECK(clim.d == 0.0);
    CHECK(clim.c > 0.0);
    emos::EmosParams prev;
    prev.a = 0.7;
    prev.status = emos::FitStatus::Fitted;
    const auto reused = emos::rolling_fit(s.data, cell, early, &prev);
    CHECK(reused.status == emos::FitStatus::Reused);
    CHECK(reused.a == 0.7);
    CHECK(reused.as_of == early);
    CHECK(reused.window_begin == early - std::chrono::days{40});
    CHECK(reused.window_end == early - std::chrono::days{1});
    const Date later = s.manifest.training_range.first;
    CHECK(emos::rolling_fit(s.data, cell, later).status == emos::FitStatus::Fitted);
  }

  TEST_CASE("model fit equals the chained rolling fits and ignores worker count") {
    const auto s = ingest::generate_synthetic(testing::small_config());
    const Date first = s.manifest.training_range.first - std::chrono::days{2};
    const Date last = first + std::chrono::days{4};
    const std::vector<int> hours{15};
    const auto one = emos::fit_emos_model(s.data, first, last, 1, {}, hours);
    const auto many = emos::fit_emos_model(s.data, first, last, 4, {}, hours);
    CHECK(one.size() == 2u * 36u * 5u);
    const emos::CellKey cell{"S002", 15, 7};
    const emos::EmosParams* prev = nullptr;
    emos::EmosParams chained;
    for (Date d = first; d <= last; d += std::chrono::days{1}) {
      chained = emos::rolling_fit(s.data, cell, d, prev);
      const auto* fitted = one.find(cell, d);
      REQUIRE(fitted != nullptr);
      CHECK(fitted->a == chained.a);
      CHECK(fitted->b == chained.b);
      CHECK(fitted->c == chained.c);
      CHECK(fitted->d == chained.d);
      prev = fitted;
    }
    for (const auto& [key, days] : one.cells()) {
      for (const auto& [d, p] : days) {
        const auto* q = many.find(key, d);
        REQUIRE(q != nullptr);
        CHECK(q->a == p.a);
        CHECK(q->d == p.d);
      }
    }
    const auto set = emos::predict_all(s.data, one);
    CHECK(set.size() == 2u * 5u);
  }
}
