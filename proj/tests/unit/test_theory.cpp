#include <doctest.h>

#include <boost/math/distributions/poisson.hpp>
#include <cmath>
#include <random>

#include "dbmatch/error.hpp"
#include "dbmatch/theory.hpp"
#include "support/oracles.hpp"

using namespace dbmatch;
using namespace dbmatch::theory;

TEST_CASE("uniform mean equals exhaustive enumeration for N <= 3") {
  int cases = 0;
  for (const auto& pmf : oracle::quarter_grid_pmfs()) {
    for (std::uint32_t n = 1; n <= 3; ++n) {
      REQUIRE(std::abs(mean_match_uniform(n, pmf[0]) - oracle::enumerate_uniform(n, pmf)) < 1e-10);
      ++cases;
    }
  }
  CHECK(cases == 105);
}

TEST_CASE("mean_match_uniform examples") {
  CHECK(mean_match_uniform(144, 1.0) == 0.0);
  CHECK(mean_match_uniform(2, 0.0) == doctest::Approx(0.75));
  CHECK(mean_match_uniform(144, 0.0) == doctest::Approx(1 - std::pow(1 - 1.0 / 144, 144)));
  CHECK(mean_match_uniform(144, 0.0) == doctest::Approx(0.6334).epsilon(1e-4));
  CHECK_THROWS_AS(mean_match_uniform(0, 0.5), DomainError);
  CHECK_THROWS_AS(mean_match_uniform(4, 1.5), DomainError);
}

TEST_CASE("uniform limits") {
  const double e = std::exp(1.0);
  CHECK(mean_match_uniform_limit(DegreeSpec::deterministic(3)) == doctest::Approx(1 - 1 / e).epsilon(1e-12));
  CHECK(mean_match_uniform_limit(DegreeSpec::binomial(144, 4.0 / 144)) ==
        doctest::Approx(1 - std::exp(-1 + std::exp(-4.0))).epsilon(1e-12));
  CHECK(mean_match_uniform_limit(DegreeSpec::binomial(10000, 0.01)) ==
        doctest::Approx(1 - 1 / e).epsilon(1e-12));
}

TEST_CASE("binomial law identities") {
  for (auto [n, p] : {std::pair{10u, 0.3}, {144u, 2.0 / 144}, {50u, 0.97}, {1u, 0.5}}) {
    const BinomialLaw law(n, p);
    double s = 0.0;
    for (std::int64_t k = 0; k <= n; ++k) {
      s += law.pmf(k);
      REQUIRE(law.cdf(k) + law.ccdf(k) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law.ccdf(-1) == 1.0);
    CHECK(law.cdf(-1) == 0.0);
    CHECK(law.pmf(-1) == 0.0);
    CHECK(law.pmf(n + 1) == 0.0);
  }
  const PoissonLaw pois(10.0);
  const boost::math::poisson_distribution<double> ref(10.0);
  for (std::int64_t k = 0; k < 40; ++k) {
    REQUIRE(pois.pmf(k) == doctest::Approx(boost::math::pdf(ref, k)).epsilon(1e-12));
    REQUIRE(pois.cdf(k) + pois.ccdf(k) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(pois.ccdf(-1) == 1.0);
}

TEST_CASE("binom_reciprocal examples") {
  CHECK(binom_reciprocal(10, 0.3, 0.0) == 0.0);
  CHECK(binom_reciprocal(1, 0.5, 1.0) == doctest::Approx(0.75));
}

TEST_CASE("binom_reciprocal equals direct summation") {
  std::mt19937_64 eng(2024);
  std::uniform_int_distribution<std::uint32_t> nd(1, 50);
  std::uniform_real_distribution<double> pd(0.001, 1.0), td(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const auto n = nd(eng);
    const double p = pd(eng), theta = td(eng);
    const double direct = oracle::binom_reciprocal_direct(n, p, theta);
    CAPTURE(n);
    CAPTURE(p);
    CAPTURE(theta);
    REQUIRE(std::abs(binom_reciprocal(n, p, theta) - direct) < 1e-10);
  }
}

TEST_CASE("greedy_grant_prob_finite examples") {
  for (std::uint32_t s = 1; s <= 6; ++s) {
    CHECK(greedy_grant_prob_finite(144, 2.0, 1, s) == doctest::Approx(1.0));
  }
  CHECK(greedy_grant_prob_finite(10, 2.0, 2, 11) == 0.0);
  CHECK(greedy_grant_prob_finite(10, 10.0, 2, 3) == 0.0);  // residual is a point mass at 9
  CHECK_THROWS_AS(greedy_grant_prob_finite(10, 0.0, 2, 1), DomainError);
}

TEST_CASE("greedy_grant_prob_finite against the independence construction") {
  // target neighbor has residual degree s - 1; the other d_u - 1 neighbors
  // have iid Bin(N-1, mean/N) residual degrees; ties are split uniformly
  const std::uint32_t n = 144, d_u = 2, s = 1;
  const double mean = 2.0;
  std::mt19937_64 eng(77);
  std::binomial_distribution<int> residual(n - 1, mean / n);
  const int reps = 400000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    int ties = 1;
    bool lost = false;
    for (std::uint32_t j = 1; j < d_u; ++j) {
      const int x = residual(eng);
      if (x < static_cast<int>(s) - 1) lost = true;
      if (x == static_cast<int>(s) - 1) ++ties;
    }
    const double w = lost ? 0.0 : 1.0 / ties;
    sum += w;
    sumsq += w * w;
  }
  const double m = sum / reps;
  const double se = std::sqrt((sumsq / reps - m * m) / reps);
  CHECK(std::abs(greedy_grant_prob_finite(n, mean, d_u, s) - m) < 3 * se);
}

TEST_CASE("greedy_f examples and fast paths") {
  const auto det2 = DegreeSpec::deterministic(2);
  CHECK(greedy_f(0, det2) == 0.0);
  CHECK(greedy_f(1, det2) == doctest::Approx(1 - std::exp(-2.0) / 2).epsilon(1e-12));
  for (std::uint32_t d : {1u, 2u, 3u, 8u}) {
    for (std::uint32_t s = 1; s <= 20; ++s) {
      REQUIRE(std::abs(greedy_f(s, DegreeSpec::deterministic(d)) - greedy_f_deterministic(s, d)) < 1e-12);
    }
  }
  for (double m : {0.5, 2.0, 10.0}) {
    for (std::uint32_t s = 1; s <= 20; ++s) {
      REQUIRE(std::abs(greedy_f(s, DegreeSpec::poisson(m)) - greedy_f_poisson(s, m)) < 1e-12);
      // binomial laws use their Poisson limit
      REQUIRE(greedy_f(s, DegreeSpec::binomial(144, m / 144)) == greedy_f(s, DegreeSpec::poisson(m)));
    }
  }
}

TEST_CASE("greedy_f stays in [0, 1]") {
  for (const auto& deg : {DegreeSpec::deterministic(1), DegreeSpec::deterministic(6),
                          DegreeSpec::poisson(0.3), DegreeSpec::poisson(12.0),
                          DegreeSpec::empirical({0.2, 0.3, 0.0, 0.5})}) {
    const auto bound = mean_match_greedy_bound(deg);
    for (std::uint32_t s = 0; s <= bound.terms; ++s) {
      const double f = greedy_f(s, deg);
      REQUIRE(f >= 0.0);
      REQUIRE(f <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("greedy bound values") {
  // 50-digit evaluation of the same series
  CHECK(mean_match_greedy_bound(DegreeSpec::deterministic(2)).value ==
        doctest::Approx(0.7311021482).epsilon(1e-9));
  CHECK(mean_match_greedy_bound(DegreeSpec::binomial(144, 2.0 / 144)).value ==
        doctest::Approx(0.6783).epsilon(5e-4 / 0.6783));
  CHECK(mean_match_greedy_bound(DegreeSpec::binomial(144, 10.0 / 144)).value ==
        doctest::Approx(0.3972).epsilon(5e-4 / 0.3972));
  const auto v = mean_match_greedy_bound(DegreeSpec::poisson(10.0), 1e-12);
  CHECK(v.tail_mass < 1e-12);
  CHECK(v.terms >= 150);
}

TEST_CASE("greedy bound decreases in d") {
  double prev = 1.0;
  for (std::uint32_t d = 2; d <= 10; ++d) {
    const double v = mean_match_greedy_bound(DegreeSpec::deterministic(d)).value;
    CHECK(v <= prev);
    prev = v;
  }
}
