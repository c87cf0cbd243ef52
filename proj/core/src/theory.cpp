#include "dbmatch/theory.hpp"

#include <algorithm>
#include <cmath>

#include "dbmatch/error.hpp"

namespace dbmatch::theory {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void fill_cumulative(const std::vector<double>& pmf, std::vector<double>& cdf,
                     std::vector<double>& ccdf) {
  const std::size_t len = pmf.size();
  cdf.assign(len, 0.0);
  ccdf.assign(len, 0.0);
  CompensatedSum head;
  for (std::size_t k = 0; k < len; ++k) {
    head.add(pmf[k]);
    cdf[k] = std::min(1.0, head.value());
  }
  CompensatedSum tail;
  for (std::size_t k = len; k-- > 0;) {
    ccdf[k] = std::min(1.0, tail.value());  // P{X > k}
    tail.add(pmf[k]);
  }
}

// sum_{j<d} a^j b^(d-1-j) = (a^d - b^d) / (a - b)
double power_divided_difference(double a, double b, std::uint32_t d) {
  double h = 0.0;
  double bpow = 1.0;
  for (std::uint32_t i = 0; i < d; ++i) {
    h = a * h + bpow;
    bpow *= b;
  }
  return h;
}

double greedy_f_with(std::uint32_t s, const DegreeSpec& law, double mean, const PoissonLaw& pois) {
  if (s == 0) return 0.0;
  const double a = pois.ccdf(static_cast<std::int64_t>(s) - 2);
  const double b = pois.ccdf(static_cast<std::int64_t>(s) - 1);
  // (G(a) - G(b)) / (mean * pi_{s-1}) with a - b = pi_{s-1}.
  const double f = law.pgf_divided_difference(a, b) / mean;
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace

// --- BinomialLaw ------------------------------------------------------------

BinomialLaw::BinomialLaw(std::uint32_t n, double p) : n_(n), p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial law: p must lie in [0, 1]");
  pmf_.assign(n + 1, 0.0);
  if (p == 0.0) {
    pmf_[0] = 1.0;
  } else if (p == 1.0) {
    pmf_[n] = 1.0;
  } else {
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    const double lnf = std::lgamma(n + 1.0);
    for (std::uint32_t k = 0; k <= n; ++k) {
      pmf_[k] = std::exp(lnf - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * lp +
                         (n - k) * lq);
    }
  }
  fill_cumulative(pmf_, cdf_, ccdf_);
}

double BinomialLaw::pmf(std::int64_t k) const noexcept {
  if (k < 0 || k > static_cast<std::int64_t>(n_)) return 0.0;
  return pmf_[static_cast<std::size_t>(k)];
}

double BinomialLaw::cdf(std::int64_t k) const noexcept {
  if (k < 0) return 0.0;
  if (k >= static_cast<std::int64_t>(n_)) return 1.0;
  return cdf_[static_cast<std::size_t>(k)];
}

double BinomialLaw::ccdf(std::int64_t k) const noexcept {
  if (k < 0) return 1.0;
  if (k >= static_cast<std::int64_t>(n_)) return 0.0;
  return ccdf_[static_cast<std::size_t>(k)];
}

// --- PoissonLaw -------------------------------------------------------------

PoissonLaw::PoissonLaw(double mean) : mean_(mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("poisson law: mean must be finite and non-negative");
  }
  if (mean == 0.0) {
    pmf_.push_back(1.0);
  } else {
    const double lm = std::log(mean);
    for (std::uint32_t k = 0;; ++k) {
      const double v = std::exp(-mean + k * lm - std::lgamma(k + 1.0));
      pmf_.push_back(v);
      // Past the mode the tail is dominated by a geometric series of ratio mean/(k+2).
      if (k > mean + 1.0) {
        const double ratio = mean / (k + 2.0);
        const double next = v * mean / (k + 1.0);
        const double bound = next / (1.0 - ratio);
        if (bound < 1e-300 || next == 0.0) {
          trunc_err_ = bound;
          break;
        }
      }
    }
  }
  fill_cumulative(pmf_, cdf_, ccdf_);
}

double PoissonLaw::pmf(std::int64_t k) const noexcept {
  if (k < 0 || k >= static_cast<std::int64_t>(pmf_.size())) return 0.0;
  return pmf_[static_cast<std::size_t>(k)];
}

double PoissonLaw::cdf(std::int64_t k) const noexcept {
  if (k < 0) return 0.0;
  if (k >= static_cast<std::int64_t>(cdf_.size())) return 1.0;
  return cdf_[static_cast<std::size_t>(k)];
}

double PoissonLaw::ccdf(std::int64_t k) const noexcept {
  if (k < 0) return 1.0;
  if (k >= static_cast<std::int64_t>(ccdf_.size())) return 0.0;
  return ccdf_[static_cast<std::size_t>(k)];
}

// --- closed forms -----------------------------------------------------------

double mean_match_uniform(std::uint32_t n, double prob_zero) {
  if (n == 0) throw DomainError("mean_match_uniform: n must be at least 1");
  if (!(prob_zero >= 0.0 && prob_zero <= 1.0)) {
    throw DomainError("mean_match_uniform: prob_zero must lie in [0, 1]");
  }
  const double x = (1.0 - prob_zero) / n;
  return -std::expm1(n * std::log1p(-x));
}

double mean_match_uniform_limit(const DegreeSpec& deg) {
  switch (deg.kind()) {
    case DegreeSpec::Kind::kDeterministic:
      return deg.trials() == 0 ? 0.0 : 1.0 - std::exp(-1.0);
    case DegreeSpec::Kind::kBinomial:
      return -std::expm1(-1.0 + std::exp(-deg.mean()));
    default:
      throw ConfigError("uniform limit is defined for deterministic and binomial degrees only");
  }
}

double binom_reciprocal(std::uint32_t n, double p, double theta) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("binom_reciprocal: p must lie in (0, 1]");
  const double m = n + 1.0;
  const double a = 1.0 - p + p * theta;
  const double b = 1.0 - p;
  double numer = 0.0;
  if (a > 0.0 && b > 0.0) {
    // a^m - b^m = b^m * expm1(m * log1p((a - b) / b)), avoiding cancellation.
    numer = std::pow(b, m) * std::expm1(m * std::log1p(p * theta / b));
  } else {
    numer = std::pow(a, m) - std::pow(b, m);
  }
  return numer / (m * p);
}

double greedy_grant_prob_finite(std::uint32_t n, double meandeg, std::uint32_t d_u,
                                std::uint32_t s) {
  if (n < 1 || d_u < 1 || s < 1) throw DomainError("greedy_grant_prob_finite: n, d_u, s >= 1");
  if (!(meandeg > 0.0 && meandeg <= n)) {
    throw DomainError("greedy_grant_prob_finite: mean degree must lie in (0, n]");
  }
  if (s > n) return 0.0;  // s - 1 outside the support of Bin(n - 1, .)
  const BinomialLaw residual(n - 1, meandeg / n);
  if (residual.pmf(static_cast<std::int64_t>(s) - 1) == 0.0) return 0.0;
  const double a = residual.ccdf(static_cast<std::int64_t>(s) - 2);
  const double b = residual.ccdf(static_cast<std::int64_t>(s) - 1);
  // (a^d - b^d) / (d q_{s-1}) with a - b = q_{s-1}.
  return power_divided_difference(a, b, d_u) / d_u;
}

DegreeSpec limiting_degree_law(const DegreeSpec& deg) {
  if (deg.kind() == DegreeSpec::Kind::kBinomial) return DegreeSpec::poisson(deg.mean());
  return deg;
}

double greedy_f(std::uint32_t s, const DegreeSpec& deg) {
  const double mean = deg.mean();
  if (!(mean > 0.0)) throw DomainError("greedy_f: mean degree must be positive");
  const PoissonLaw pois(mean);
  return greedy_f_with(s, limiting_degree_law(deg), mean, pois);
}

double greedy_f_deterministic(std::uint32_t s, std::uint32_t d) {
  if (d == 0) throw DomainError("greedy_f_deterministic: d must be positive");
  if (s == 0) return 0.0;
  const PoissonLaw pois(d);
  const double pi = pois.pmf(static_cast<std::int64_t>(s) - 1);
  if (pi == 0.0) return 0.0;
  const double a = pois.ccdf(static_cast<std::int64_t>(s) - 2);
  // a^d - b^d with b = a - pi, written as a^d (1 - (1 - pi/a)^d) to avoid
  // cancellation when b is close to a
  return -std::pow(a, d) * std::expm1(d * std::log1p(-pi / a)) / (d * pi);
}

double greedy_f_poisson(std::uint32_t s, double mean) {
  if (!(mean > 0.0)) throw DomainError("greedy_f_poisson: mean must be positive");
  if (s == 0) return 0.0;
  const PoissonLaw pois(mean);
  const double pi = pois.pmf(static_cast<std::int64_t>(s) - 1);
  if (pi == 0.0) return 0.0;
  const double cdf_hi = pois.cdf(static_cast<std::int64_t>(s) - 1);
  // e^{-m Pi_{s-2}} - e^{-m Pi_{s-1}} = e^{-m Pi_{s-1}} (e^{m pi_{s-1}} - 1)
  return std::exp(-mean * cdf_hi) * std::expm1(mean * pi) / (mean * pi);
}

SeriesValue mean_match_greedy_bound(const DegreeSpec& deg, double tail_tol) {
  const double mean = deg.mean();
  if (!(mean > 0.0)) throw DomainError("greedy bound: mean degree must be positive");
  if (!(tail_tol > 0.0)) throw DomainError("greedy bound: tail tolerance must be positive");

  const PoissonLaw pois(mean);
  const DegreeSpec law = limiting_degree_law(deg);
  const auto min_terms = static_cast<std::uint32_t>(std::ceil(10.0 * mean + 50.0));

  CompensatedSum unmatched;
  SeriesValue out;
  for (std::uint32_t s = 0;; ++s) {
    const double w = pois.pmf(s);
    const double f = greedy_f_with(s, law, mean, pois);
    unmatched.add(w * std::pow(1.0 - f, static_cast<double>(s)));
    out.terms = s + 1;
    out.tail_mass = pois.ccdf(s);
    if (out.terms >= min_terms && out.tail_mass < tail_tol) break;
  }
  out.value = 1.0 - unmatched.value();
  return out;
}

}  // namespace dbmatch::theory
