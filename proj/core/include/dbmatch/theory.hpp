#pragma once

#include <cstdint>
#include <vector>

#include "dbmatch/graph.hpp"

namespace dbmatch::theory {

/// Binomial(n, p) law with pmf q_k, cdf Q_k and ccdf Qbar_k. Out-of-support
/// indices follow the usual conventions: q_k = 0, Q_{-1} = 0, Qbar_{-1} = 1.
class BinomialLaw {
 public:
  BinomialLaw(std::uint32_t n, double p);

  std::uint32_t n() const noexcept { return n_; }
  double p() const noexcept { return p_; }

  double pmf(std::int64_t k) const noexcept;
  double cdf(std::int64_t k) const noexcept;
  double ccdf(std::int64_t k) const noexcept;

 private:
  std::uint32_t n_;
  double p_;
  std::vector<double> pmf_;   // full table, n is small in practice
  std::vector<double> cdf_;   // compensated prefix sums
  std::vector<double> ccdf_;  // compensated suffix sums: ccdf_[k] = P{X > k}
};

/// Poisson(mean) law with pmf pi_s, cdf Pi_s, ccdf Pibar_s. The table is
/// extended until the remaining tail mass is below 1e-300 or underflows.
class PoissonLaw {
 public:
  explicit PoissonLaw(double mean);

  double mean() const noexcept { return mean_; }
  double pmf(std::int64_t k) const noexcept;
  double cdf(std::int64_t k) const noexcept;
  double ccdf(std::int64_t k) const noexcept;
  /// Upper bound on the mass beyond the last tabulated index.
  double truncation_error() const noexcept { return trunc_err_; }

 private:
  double mean_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::vector<double> ccdf_;
  double trunc_err_ = 0.0;
};

/// Mean matched fraction of DB(0) on a D-out graph with N nodes per side.
double mean_match_uniform(std::uint32_t n, double prob_zero);

/// N -> infinity limit of mean_match_uniform for deterministic or binomial
/// degrees (binomial means Bin(N, mean/N) with the mean held fixed).
double mean_match_uniform_limit(const DegreeSpec& deg);

/// E[theta^(X+1) / (X+1)] for X ~ Bin(n, p), p > 0.
double binom_reciprocal(std::uint32_t n, double p, double theta);

/// Greedy grant probability from a degree-d_u sender to a degree-s neighbor
/// when the residual degrees of its neighbors are iid Bin(n-1, meandeg/n).
double greedy_grant_prob_finite(std::uint32_t n, double meandeg, std::uint32_t d_u,
                                std::uint32_t s);

/// Limiting greedy grant probability f(s) for a receiver of degree s.
/// Uses the degree law's generating function; binomial laws are taken in
/// their Poisson limit.
double greedy_f(std::uint32_t s, const DegreeSpec& deg);

/// Closed forms for deterministic and Poisson out-degrees, kept separate from
/// greedy_f so each can be checked against the other.
double greedy_f_deterministic(std::uint32_t s, std::uint32_t d);
double greedy_f_poisson(std::uint32_t s, double mean);

struct SeriesValue {
  double value = 0.0;
  std::uint32_t terms = 0;    // number of receiver degrees s summed
  double tail_mass = 0.0;     // Poisson mass of the omitted terms
};

/// Asymptotic lower bound on the mean matched fraction under greedy
/// selection. Truncates once the Poisson tail is below `tail_tol` and at
/// least 10 * mean + 50 terms have been added.
SeriesValue mean_match_greedy_bound(const DegreeSpec& deg, double tail_tol = 1e-12);

/// Law used for the sender generating function in the N -> infinity limit.
DegreeSpec limiting_degree_law(const DegreeSpec& deg);

}  // namespace dbmatch::theory
