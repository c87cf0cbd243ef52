#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbmatch/error.hpp"
#include "dbmatch/experiments.hpp"
#include "dbmatch/matching.hpp"
#include "dbmatch/theory.hpp"

using namespace dbmatch;

namespace {

// Maximum matching by exhaustive search over receiver subsets.
std::uint32_t brute_max_matching(const BipartiteGraph& g) {
  const std::uint32_t n = g.n_senders();
  std::vector<int> best(1u << g.n_receivers(), -1);
  // best[mask] after processing senders 0..u-1: size of the largest
  // matching using exactly the receivers in mask
  best[0] = 0;
  for (NodeId u = 0; u < n; ++u) {
    auto next = best;
    for (std::uint32_t mask = 0; mask < best.size(); ++mask) {
      if (best[mask] < 0) continue;
      for (NodeId v : g.neighbors(u)) {
        if (mask & (1u << v)) continue;
        next[mask | (1u << v)] = std::max(next[mask | (1u << v)], best[mask] + 1);
      }
    }
    best = std::move(next);
  }
  return static_cast<std::uint32_t>(*std::max_element(best.begin(), best.end()));
}

}  // namespace

TEST_CASE("db_grant_pmf examples") {
  // sender 0 sees receivers with degrees {2,2,2}
  const BipartiteGraph sym(3, {{0, 1, 2}, {0, 1, 2}});
  for (double a : {-3.0, 0.0, 2.0}) {
    for (double p : db_grant_pmf(sym, 0, a)) CHECK(p == doctest::Approx(1.0 / 3));
  }
  // degrees {1, 2}
  const BipartiteGraph g(2, {{0, 1}, {1}});
  const auto m1 = db_grant_pmf(g, 0, -1.0);
  CHECK(m1[0] == doctest::Approx(2.0 / 3));
  CHECK(m1[1] == doctest::Approx(1.0 / 3));
  const auto m0 = db_grant_pmf(g, 0, 0.0);
  CHECK(m0[0] == doctest::Approx(0.5));
  CHECK(db_grant_pmf(BipartiteGraph(2, {{}, {}}), 0, -1.0).empty());
}

TEST_CASE("DB(0) pmf is uniform on random graphs") {
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto g = generate_dout(30, DegreeSpec::poisson(5), RngSeed{1, r});
    for (NodeId u = 0; u < 30; ++u) {
      for (double p : db_grant_pmf(g, u, 0.0)) REQUIRE(p == doctest::Approx(1.0 / g.out_degree(u)));
    }
  }
}

TEST_CASE("strongly negative alpha concentrates on minimum degree") {
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto g = generate_dout(144, DegreeSpec::poisson(6), RngSeed{2, r});
    const auto deg = receiver_degrees(g);
    for (NodeId u = 0; u < 144; ++u) {
      const auto nb = g.neighbors(u);
      if (nb.empty()) continue;
      const auto pmf = db_grant_pmf(g, deg, u, -40.0);
      std::uint32_t dmin = 1000;
      for (NodeId v : nb) dmin = std::min(dmin, deg[v]);
      double mass = 0.0;
      std::uint32_t ties = 0;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        if (deg[nb[i]] == dmin) {
          mass += pmf[i];
          ++ties;
        }
      }
      // each heavier neighbor carries at most ((dmin + 1) / dmin)^-40 of the
      // weight of a minimum one; with dmin <= 2 this is below 1e-7
      const double leak = std::pow((dmin + 1.0) / dmin, -40.0);
      const double floor = ties / (ties + (nb.size() - ties) * leak);
      REQUIRE(mass >= floor - 1e-12);
      if (dmin <= 2 && nb.size() <= 8) REQUIRE(mass >= 1.0 - 1e-6);
      for (std::size_t i = 0; i < nb.size(); ++i) {
        if (deg[nb[i]] == dmin) REQUIRE(pmf[i] == doctest::Approx(mass / ties));
      }
    }
  }
}

TEST_CASE("greedy breaks ties uniformly") {
  // receivers 0 and 1 have degree 1, receiver 2 has degree 2
  const BipartiteGraph g(3, {{0, 1, 2}, {2}});
  const int reps = 20000;
  int first = 0;
  for (int r = 0; r < reps; ++r) {
    const auto res = run_round(g, SelectionRule::greedy(), RngSeed{3, static_cast<std::uint64_t>(r)});
    REQUIRE(res.grants[0].has_value());
    REQUIRE(*res.grants[0] != 2);
    first += *res.grants[0] == 0;
  }
  CHECK(std::abs(first / double(reps) - 0.5) < 4 * std::sqrt(0.25 / reps));
}

TEST_CASE("relabeling receivers permutes the grant pmf") {
  const std::uint32_t n = 25;
  const auto g = generate_dout(n, DegreeSpec::poisson(4), RngSeed{4, 0});
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 7, perm.end());
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.neighbors(u)) adj[u].push_back(perm[v]);
  }
  const BipartiteGraph h(n, adj);
  for (NodeId u = 0; u < n; ++u) {
    const auto a = db_grant_pmf(g, u, -1.7);
    const auto b = db_grant_pmf(h, u, -1.7);
    const auto nb = g.neighbors(u);
    const auto nh = h.neighbors(u);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const auto j = std::find(nh.begin(), nh.end(), perm[nb[i]]) - nh.begin();
      REQUIRE(a[i] == doctest::Approx(b[j]).epsilon(1e-14));
    }
  }
}

TEST_CASE("run_round basics") {
  const auto empty = run_round(BipartiteGraph(4, 4), SelectionRule::uniform(), RngSeed{5, 0});
  CHECK(empty.pairs.empty());
  CHECK(empty.matched_fraction == 0.0);
  CHECK(empty.control.total() == 0);

  const auto g = generate_dout(50, DegreeSpec::poisson(3), RngSeed{5, 1});
  const auto r = run_round(g, SelectionRule::db(-1.0), RngSeed{5, 2});
  CHECK(is_valid_matching(g, r));
  CHECK(r.control.notify == g.edge_count());
  CHECK(r.control.req == g.edge_count());
  std::uint64_t granting = 0;
  for (const auto& x : r.grants) granting += x.has_value();
  CHECK(r.control.grant == granting);
  CHECK(r.control.accept == r.pairs.size());
  CHECK(r.matched_fraction == doctest::Approx(r.pairs.size() / 50.0));
}

TEST_CASE("N=2 complete bipartite, uniform grants: exhaustive 0.75 and Monte Carlo") {
  // four equiprobable grant outcomes; collisions in two of them
  double exact = 0.0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) exact += (a == b ? 1.0 : 2.0) / 2.0 / 4.0;
  }
  CHECK(exact == doctest::Approx(0.75));
  CHECK(theory::mean_match_uniform(2, 0.0) == doctest::Approx(exact).epsilon(1e-14));
  const auto g = BipartiteGraph::complete(2);
  double sum = 0.0;
  const int reps = 40000;
  for (int r = 0; r < reps; ++r) {
    sum += run_round(g, SelectionRule::uniform(), RngSeed{6, static_cast<std::uint64_t>(r)})
               .matched_fraction;
  }
  CHECK(std::abs(sum / reps - 0.75) < 4 * std::sqrt(0.0625 / reps));
}

TEST_CASE("matching validity and dominance") {
  for (std::uint64_t r = 0; r < 300; ++r) {
    const auto g = generate_dout(12, DegreeSpec::poisson(2.5), RngSeed{7, r});
    const auto mm = max_matching(g);
    REQUIRE(mm == brute_max_matching(g));
    for (const auto& rule : {SelectionRule::uniform(), SelectionRule::greedy(), SelectionRule::db(-3)}) {
      const auto res = run_round(g, rule, RngSeed{8, r});
      REQUIRE(is_valid_matching(g, res));
      REQUIRE(res.pairs.size() <= mm);
    }
    IslipState st(12);
    const auto is = islip_round(g, st);
    REQUIRE(is_valid_matching(g, is));
    REQUIRE(is.pairs.size() <= mm);
  }
}

TEST_CASE("is_valid_matching rejects bad matchings") {
  const auto g = BipartiteGraph::complete(3);
  MatchResult r;
  r.pairs = {{0, 1}, {1, 1}};
  CHECK_FALSE(is_valid_matching(g, r));
  const BipartiteGraph h(3, {{0}, {1}, {}});
  r.pairs = {{2, 2}};
  CHECK_FALSE(is_valid_matching(h, r));
}

TEST_CASE("max_matching examples") {
  CHECK(max_matching(BipartiteGraph(4, {{0}, {1}, {2}, {3}})) == 4);
  CHECK(max_matching(BipartiteGraph(4, {{0}, {0}, {0}, {0}})) == 1);
  CHECK(max_matching(BipartiteGraph::complete(7)) == 7);
  CHECK(max_matching(BipartiteGraph(3, 3)) == 0);
}

TEST_CASE("iSLIP golden sequences") {
  SUBCASE("empty graph leaves state unchanged") {
    IslipState st(3);
    st.grant_ptr = {1, 2, 0};
    const auto before = st;
    CHECK(islip_round(BipartiteGraph(3, 3), st).pairs.empty());
    CHECK(st == before);
  }
  SUBCASE("N=2 fresh state") {
    IslipState st(2);
    const auto r = islip_round(BipartiteGraph::complete(2), st);
    CHECK(r.pairs == std::vector<std::pair<NodeId, NodeId>>{{0, 0}});
    CHECK(r.control.notify == 0);
    CHECK(r.control.req == 4);
    CHECK(r.control.grant == 2);
    CHECK(r.control.accept == 1);
  }
  SUBCASE("N=3 three rounds") {
    IslipState st(3);
    const auto g = BipartiteGraph::complete(3);
    using P = std::vector<std::pair<NodeId, NodeId>>;
    CHECK(islip_round(g, st).pairs == P{{0, 0}});
    CHECK(islip_round(g, st).pairs == P{{0, 1}, {1, 0}});
    CHECK(islip_round(g, st).pairs == P{{0, 2}, {1, 1}, {2, 0}});
    // desynchronized: full matchings from here on
    CHECK(islip_round(g, st).pairs.size() == 3);
  }
  SUBCASE("dimension mismatch") {
    IslipState st(2);
    CHECK_THROWS_AS(islip_round(BipartiteGraph::complete(3), st), ConfigError);
  }
}

TEST_CASE("uniform Monte Carlo agrees with the exact mean") {
  for (std::uint32_t n : {8u, 32u, 144u}) {
    for (std::uint32_t d : {2u, 4u, 8u}) {
      for (const auto& deg : {DegreeSpec::deterministic(d), DegreeSpec::binomial(n, double(d) / n)}) {
        ExperimentConfig cfg;
        cfg.n = n;
        cfg.deg = deg;
        cfg.base_seed = RngSeed{100 + n, d};
        const auto row = run_replicates(cfg).rows.front();
        REQUIRE(row.theory.has_value());
        CAPTURE(n);
        CAPTURE(deg.to_string());
        CHECK(std::abs(row.mean - *row.theory) < 3 * row.stderr_);
      }
    }
  }
}

TEST_CASE("uniform matching is insensitive to the degree law") {
  ExperimentConfig cfg;
  cfg.deg = DegreeSpec::deterministic(2);
  const double a = run_replicates(cfg).rows.front().mean;
  cfg.deg = DegreeSpec::deterministic(8);
  const double b = run_replicates(cfg).rows.front().mean;
  CHECK(std::abs(a - b) < 0.005);
}

TEST_CASE("greedy on Det(2) at N=144") {
  ExperimentConfig cfg;
  cfg.rule = SelectionRule::greedy();
  // reference value 0.7257; this model and an independent
  // simulation both give about 0.731
  CHECK(run_replicates(cfg).rows.front().mean == doctest::Approx(0.7257).epsilon(0.01 / 0.7257));
}

TEST_CASE("max matching on Det(4) at N=144") {
  ExperimentConfig cfg;
  cfg.deg = DegreeSpec::deterministic(4);
  CHECK(max_matching_baseline(cfg).rows.front().mean == doctest::Approx(0.979).epsilon(0.005 / 0.979));
}
