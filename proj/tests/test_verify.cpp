#include <random>

#include "doctest.h"
#include "support.hpp"
#include "traject/error.hpp"
#include "traject/verify.hpp"

using namespace traject;

namespace {

verify::VerificationCase make_case(int lead, double y, double mu, double raft_mu, Instant valid) {
  verify::VerificationCase c;
  c.station = "S";
  c.lead = lead;
  c.init_hour = 3;
  c.valid = valid;
  c.y = y;
  c.emos = {mu, 1.0};
  c.raft_mu = raft_mu;
  MemberValues m{};
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = mu + 0.1 * (static_cast<double>(i) - 5.5);
  c.members = m;
  return c;
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("RMSE of known errors") {
    const std::vector<double> f{1, 2, 3, 4};
    const std::vector<double> y{2, 2, 1, 4};
    CHECK(verify::rmse(f, y) == doctest::Approx(std::sqrt(5.0 / 4.0)));
    CHECK_THROWS_AS(verify::rmse(std::span<const double>{}, std::span<const double>{}), DataError);
  }

  TEST_CASE("ensemble CRPS equals the double-sum definition") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 2.0);
    for (int t = 0; t < 200; ++t) {
      std::array<double, kMembers> x{};
      for (double& v : x) v = z(rng);
      const double y = z(rng);
      CHECK(std::fabs(verify::crps_ensemble(x, y) - testing::crps_ensemble_double_sum(x, y)) < 1e-12);
    }
    const std::array<double, 1> one{2.0};
    CHECK(verify::crps_ensemble(one, 5.0) == 3.0);
  }

  TEST_CASE("ensemble CRPS of a large Gaussian sample approaches the closed form") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z(1.0, 2.0);
    double previous_gap = 1e9;
    for (int m : {12, 200, 5000}) {
      // average over several draws to isolate the finite-m bias
      double gap = 0.0;
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(static_cast<std::size_t>(m));
        for (double& v : x) v = z(rng);
        gap += verify::crps_ensemble(x, 0.5) - emos::crps_gaussian(1.0, 2.0, 0.5);
      }
      gap = std::fabs(gap / 20.0);
      CHECK(gap < previous_gap + 0.01);
      previous_gap = gap;
    }
    CHECK(previous_gap < 0.02);
  }

  TEST_CASE("PIT and rank extremes") {
    CHECK(verify::pit({0.0, 1.0}, 0.0) == doctest::Approx(0.5));
    CHECK(verify::pit({0.0, 1.0}, 40.0) == doctest::Approx(1.0));
    std::mt19937_64 rng(1);
    const std::array<double, kMembers> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    CHECK(verify::rank(x, 0.0, rng) == 1);
    CHECK(verify::rank(x, 13.0, rng) == 13);
    CHECK(verify::rank(x, 6.5, rng) == 7);
    for (int i = 0; i < 20; ++i) {
      const int r = verify::rank(x, 6.0, rng);
      CHECK((r == 6 || r == 7));
    }
  }

  TEST_CASE("calibrated ensemble gives a flat rank histogram and nominal coverage") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<int> ranks;
    std::vector<verify::Interval> env;
    std::vector<double> obs;
    constexpr int n = 20000;
    for (int t = 0; t < n; ++t) {
      std::array<double, kMembers> x{};
      for (double& v : x) v = z(rng);
      const double y = z(rng);
      ranks.push_back(verify::rank(x, y, rng));
      env.push_back(verify::envelope(x));
      obs.push_back(y);
    }
    const auto h = verify::rank_histogram(ranks);
    CHECK(h.total() == n);
    CHECK(verify::chi_square_uniform_pvalue(h) > 0.01);
    CHECK(verify::histogram_dispersion(h) == doctest::Approx((13.0 * 13.0 - 1.0) / (12.0 * 144.0)).epsilon(0.03));
    const double cov = verify::coverage(env, obs);
    const double se = std::sqrt(verify::kEnvelopeNominal * (1 - verify::kEnvelopeNominal) / n);
    CHECK(std::fabs(cov - verify::kEnvelopeNominal) < 3.0 * se);
  }

  TEST_CASE("underdispersed ensemble gives a U-shaped rank histogram") {
    std::mt19937_64 rng(78);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<int> ranks;
    for (int t = 0; t < 5000; ++t) {
      std::array<double, kMembers> x{};
      for (double& v : x) v = 0.4 * z(rng);
      ranks.push_back(verify::rank(x, z(rng), rng));
    }
    const auto h = verify::rank_histogram(ranks);
    CHECK(verify::chi_square_uniform_pvalue(h) < 1e-6);
    CHECK(h.counts.front() > 3 * h.counts[6]);
    CHECK(h.counts.back() > 3 * h.counts[6]);
    CHECK(verify::histogram_dispersion(h) > 0.12);
  }

  TEST_CASE("Gaussian central interval has the nominal probability") {
    const auto iv = verify::central_interval({0.0, 4.0}, 0.95);
    CHECK(iv.high == doctest::Approx(2.0 * 1.959963984540054));
    CHECK(iv.low == doctest::Approx(-iv.high));
    CHECK_THROWS_AS(verify::central_interval({0.0, 1.0}, 1.5), ConfigError);
  }

  TEST_CASE("skill score") {
    CHECK(verify::skill_score(0.8, 1.0) == doctest::Approx(0.2));
    CHECK(verify::skill_score(1.2, 1.0) == doctest::Approx(-0.2));
    CHECK_THROWS_AS(verify::skill_score(1.0, 0.0), ConfigError);
  }

  TEST_CASE("bootstrap intervals") {
    const std::vector<double> constant(50, 2.5);
    const auto c = verify::bootstrap_ci(constant, 200, 0.9, 3);
    CHECK(c.low == 2.5);
    CHECK(c.high == 2.5);
    const auto again = verify::bootstrap_ci(constant, 200, 0.9, 3);
    CHECK(again.mean == c.mean);
    CHECK_THROWS_AS(verify::bootstrap_ci(std::vector<double>{1.0}, 10, 0.9, 1), DataError);
    CHECK_THROWS_AS(verify::bootstrap_ci(constant, 10, 1.0, 1), ConfigError);

    // a 90% interval for the mean of N(0, 1) samples covers 0 about 90% of the time
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    int hits = 0;
    constexpr int trials = 300;
    for (int t = 0; t < trials; ++t) {
      std::vector<double> x(100);
      for (double& v : x) v = z(rng);
      const auto ci = verify::bootstrap_ci(x, 400, 0.9, static_cast<std::uint64_t>(t));
      hits += ci.low <= 0.0 && 0.0 <= ci.high ? 1 : 0;
    }
    const double rate = static_cast<double>(hits) / trials;
    CHECK(rate > 0.84);
    CHECK(rate < 0.95);
  }

  TEST_CASE("slices parse, describe and filter") {
    const auto s = verify::ScoreSlice::parse("site_type=coastal;lead=1-12;season=JJA");
    CHECK(s.describe() == "site_type=coastal;lead=1-12;season=JJA");
    CHECK(verify::ScoreSlice::parse(s.describe()).describe() == s.describe());
    CHECK(verify::ScoreSlice::parse("all").describe() == "all");
    CHECK(verify::ScoreSlice::parse("lead=7").describe() == "lead=7");
    CHECK_THROWS_AS(verify::ScoreSlice::parse("colour=red"), ConfigError);
    CHECK_THROWS_AS(verify::ScoreSlice::parse("lead"), ConfigError);
    CHECK_THROWS_AS(verify::ScoreSlice::parse("lead=x"), ConfigError);
    CHECK(verify::season_of(instant_of(make_date(2014, 12, 1), 0)) == verify::Season::DJF);
    CHECK(verify::season_of(instant_of(make_date(2014, 8, 31), 23)) == verify::Season::JJA);
  }

  TEST_CASE("aggregation over disjoint lead bands recombines to the whole") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<verify::VerificationCase> cases;
    const Instant t0 = instant_of(make_date(2014, 3, 1), 3);
    for (int i = 0; i < 360; ++i) {
      const int lead = 1 + i % kMaxLead;
      cases.push_back(make_case(lead, z(rng), 0.3 * z(rng), 0.2 * z(rng), t0 + i));
    }
    for (auto kind : {verify::MetricKind::Crps, verify::MetricKind::Coverage, verify::MetricKind::Rmse}) {
      const verify::Metric metric{kind, verify::System::Emos};
      double total = 0.0;
      std::size_t n = 0;
      for (const auto& band : {verify::ScoreSlice::lead_band(1, 12), verify::ScoreSlice::lead_band(13, 24),
                               verify::ScoreSlice::lead_band(25, 36)}) {
        const auto r = verify::aggregate(cases, band, metric);
        const double mean = kind == verify::MetricKind::Rmse ? r.value * r.value : r.value;
        total += mean * static_cast<double>(r.n);
        n += r.n;
      }
      const auto all = verify::aggregate(cases, {}, metric);
      CHECK(n == all.n);
      const double all_mean = kind == verify::MetricKind::Rmse ? all.value * all.value : all.value;
      CHECK(total / static_cast<double>(n) == doctest::Approx(all_mean));
    }
    const auto raft = verify::aggregate(cases, {}, {verify::MetricKind::Rmse, verify::System::Raft});
    std::vector<double> f;
    std::vector<double> y;
    for (const auto& c : cases) {
      f.push_back(c.raft_mu);
      y.push_back(c.y);
    }
    CHECK(raft.value == doctest::Approx(verify::rmse(f, y)));
    const auto with_ci = verify::aggregate(cases, {}, {verify::MetricKind::Crps, verify::System::Raw},
                                           verify::BootstrapOptions{200, 0.9, 1});
    REQUIRE(with_ci.ci.has_value());
    CHECK(with_ci.ci->low <= with_ci.value);
    CHECK(with_ci.value <= with_ci.ci->high);
  }

  TEST_CASE("empty slices name themselves in the error") {
    std::vector<verify::VerificationCase> cases{make_case(1, 0.0, 0.0, 0.0, instant_of(make_date(2014, 1, 1), 4))};
    try {
      (void)verify::aggregate(cases, verify::ScoreSlice::parse("site_type=mountain"),
                              {verify::MetricKind::Rmse, verify::System::Emos});
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("site_type=mountain") != std::string::npos);
    }
    cases[0].members.reset();
    CHECK_THROWS_AS(verify::case_score(cases[0], {verify::MetricKind::Crps, verify::System::Raw}), DataError);
  }

  TEST_CASE("metric names round-trip") {
    for (auto k : {verify::MetricKind::Rmse, verify::MetricKind::Crps, verify::MetricKind::Coverage}) {
      for (auto s : {verify::System::Raw, verify::System::Emos, verify::System::Raft}) {
        const verify::Metric m{k, s};
        CHECK(verify::Metric::parse(m.name()).name() == m.name());
      }
    }
  }
}
