#pragma once

#include <algorithm>
#include <bit>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace dbmatch::oracle {

// Expected matched fraction of uniform grants on an n x n D-out graph, by
// enumerating every degree, neighborhood and grant outcome. n <= 5.
inline double enumerate_uniform(std::uint32_t n, const std::vector<double>& pmf) {
  std::vector<std::vector<std::uint32_t>> subsets_by_size(n + 1);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    subsets_by_size[std::popcount(mask)].push_back(mask);
  }
  double expect = 0.0;
  std::function<void(std::uint32_t, std::uint32_t, double)> rec = [&](std::uint32_t u,
                                                                      std::uint32_t granted,
                                                                      double prob) {
    if (u == n) {
      expect += prob * std::popcount(granted) / n;
      return;
    }
    for (std::uint32_t k = 0; k < pmf.size(); ++k) {
      if (pmf[k] == 0.0) continue;
      const std::uint32_t m = std::min(k, n);
      if (m == 0) {
        rec(u + 1, granted, prob * pmf[k]);
        continue;
      }
      const auto& subsets = subsets_by_size[m];
      for (std::uint32_t s : subsets) {
        for (std::uint32_t v = 0; v < n; ++v) {
          if (s & (1u << v)) rec(u + 1, granted | (1u << v), prob * pmf[k] / subsets.size() / m);
        }
      }
    }
  };
  rec(0, 0, 1.0);
  return expect;
}

// Degree pmfs on {0..3} with masses in multiples of 1/4.
inline std::vector<std::vector<double>> quarter_grid_pmfs() {
  std::vector<std::vector<double>> out;
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) {
      for (int c = 0; a + b + c <= 4; ++c) {
        out.push_back({a / 4.0, b / 4.0, c / 4.0, (4 - a - b - c) / 4.0});
      }
    }
  }
  return out;
}

// E[theta^(X+1) / (X+1)] for X ~ Bin(n, p) by direct summation.
inline double binom_reciprocal_direct(std::uint32_t n, double p, double theta) {
  const boost::math::binomial_distribution<double> law(n, p);
  double s = 0.0;
  for (std::uint32_t k = 0; k <= n; ++k) s += std::pow(theta, k + 1) / (k + 1) * boost::math::pdf(law, k);
  return s;
}

}  // namespace dbmatch::oracle
