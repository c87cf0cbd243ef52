#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dbmatch/dynsim.hpp"
#include "dbmatch/error.hpp"

using namespace dbmatch;
using namespace dbmatch::dynsim;

namespace {

FabricConfig small_fabric(Algorithm a, std::uint32_t hosts, std::uint32_t horizon,
                          std::uint32_t warmup) {
  FabricConfig f;
  f.algorithm = a;
  f.n_hosts = hosts;
  f.horizon = horizon;
  f.warmup = warmup;
  return f;
}

}  // namespace

TEST_CASE("algorithm names") {
  for (auto a : {Algorithm::kTwoCgs, Algorithm::kOneRoundDcPim, Algorithm::kIslip}) {
    CHECK(parse_algorithm(to_string(a)) == a);
  }
  CHECK_THROWS_AS(parse_algorithm("pim"), ConfigError);
}

TEST_CASE("fabric validation") {
  FabricConfig f;
  CHECK_NOTHROW(f.validate());
  CHECK(f.bdp() == doctest::Approx(50000.0));
  f.warmup = f.horizon;
  CHECK_THROWS_AS(f.validate(), ConfigError);
  f = FabricConfig{};
  f.slot_duration = 1e-6;
  CHECK_THROWS_AS(f.validate(), ConfigError);
  f = FabricConfig{};
  f.n_hosts = 1;
  CHECK_THROWS_AS(f.validate(), ConfigError);
}

TEST_CASE("workload sampling matches its mean and short share") {
  const double bdp = 50000.0;
  for (const auto& w : {Workload::imc10_like(bdp), Workload::sgd_like(bdp)}) {
    Engine eng = make_engine(RngSeed{1, 0});
    const int reps = 400000;
    double sum = 0.0, short_bytes = 0.0;
    for (int i = 0; i < reps; ++i) {
      const double x = w.sample_size(eng);
      REQUIRE(x > 0.0);
      sum += x;
      if (x <= bdp) short_bytes += x;
    }
    CAPTURE(w.name());
    // bounded Pareto with shape near 1 is heavy; allow 2%
    CHECK(sum / reps == doctest::Approx(w.mean_size()).epsilon(0.02));
    CHECK(short_bytes / sum == doctest::Approx(w.short_byte_share(bdp)).epsilon(0.05));
  }
}

TEST_CASE("pair arrival rate gives the offered byte rate") {
  auto w = Workload::imc10_like(50000.0);
  w.set_load(0.5);
  FabricConfig f;
  const double per_host = w.pair_arrival_rate(f) * (f.n_hosts - 1) * w.mean_size();
  CHECK(per_host == doctest::Approx(0.5 * f.link_rate));
  CHECK_THROWS_AS(w.set_load(1.0), ConfigError);
  CHECK_THROWS_AS(w.set_load(-0.1), ConfigError);
}

TEST_CASE("workload from file and by name") {
  const std::string path = "dbmatch_test_workload.txt";
  {
    std::ofstream os(path);
    os << "# size prob\n1000 0.5\n200000 0.5\n";
  }
  const auto w = Workload::by_name("file:" + path, 50000.0);
  CHECK(w.mean_size() == doctest::Approx(100500.0));
  CHECK(w.short_byte_share(50000.0) == doctest::Approx(1000.0 / 201000.0));
  std::remove(path.c_str());
  CHECK_THROWS_AS(Workload::by_name("file:/nonexistent/x", 50000.0), ConfigError);
  CHECK_THROWS_AS(Workload::by_name("websearch", 50000.0), ConfigError);
  CHECK_THROWS_AS(Workload::empirical("bad", {{100.0, 0.5}}), ConfigError);
}

TEST_CASE("zero load gives an idle fabric") {
  auto w = Workload::imc10_like(50000.0);
  w.set_load(0.0);
  const auto s = run_dynsim(small_fabric(Algorithm::kTwoCgs, 16, 200, 20), w, RngSeed{2, 0});
  CHECK(s.normalized_throughput == 0.0);
  CHECK(s.mean_matching_fraction == 0.0);
  CHECK(s.arrived_bytes == 0.0);
  for (const auto& m : s.slots) REQUIRE(m.matched == 0);
}

TEST_CASE("isolated long messages finish within one slot of optimal") {
  const double size = 5 * 50000.0;
  auto w = Workload::empirical("single", {{size, 1.0}});
  // about one message per 2000 slots per pair
  w.set_load(size / (12.5e9 * 4e-6) / 2000.0);
  for (auto a : {Algorithm::kTwoCgs, Algorithm::kOneRoundDcPim, Algorithm::kIslip}) {
    const auto s = run_dynsim(small_fabric(a, 2, 40000, 1), w, RngSeed{3, 0});
    REQUIRE(s.long_fct.completed >= 10);
    const double optimal = size / 12.5e9 + 4e-6;
    CHECK(s.long_fct.min >= 1.0);
    CHECK(s.long_fct.p99 <= 1.0 + 4e-6 / optimal + 1e-12);
  }
}

TEST_CASE("conservation, control counts and FCT floor under load") {
  auto w = Workload::imc10_like(50000.0);
  w.set_load(0.6);
  for (auto a : {Algorithm::kTwoCgs, Algorithm::kOneRoundDcPim, Algorithm::kIslip}) {
    CAPTURE(to_string(a));
    const auto s = run_dynsim(small_fabric(a, 32, 1500, 300), w, RngSeed{4, 0});
    CHECK(s.arrived_bytes == doctest::Approx(s.served_bytes + s.final_backlog_bytes).epsilon(1e-9));
    CHECK(s.short_fct.min >= 1.0);
    CHECK(s.long_fct.min >= 1.0);
    CHECK(s.short_fct.p50 <= s.short_fct.p99);
    ControlCounts sum;
    for (const auto& m : s.slots) {
      REQUIRE(m.matched <= 32);
      REQUIRE(m.busy_pairs <= m.matched);
      REQUIRE(m.served_bytes <= 32 * 50000.0 * (1 + 1e-12));
      if (a == Algorithm::kIslip) {
        REQUIRE(m.control.notify == 0);
      } else {
        REQUIRE(m.control.notify == m.control.req);
      }
      REQUIRE(m.control.accept == m.matched);
      if (m.slot >= s.warmup) sum += m.control;
    }
    CHECK(control_message_census(s) == sum);
    CHECK(s.control == sum);
    if (a == Algorithm::kTwoCgs) {
      // max(2) thinning caps NOTIFY at two per host
      for (const auto& m : s.slots) REQUIRE(m.control.notify <= 64);
    }
  }
}

TEST_CASE("runs are reproducible") {
  auto w = Workload::sgd_like(50000.0);
  w.set_load(0.5);
  const auto f = small_fabric(Algorithm::kTwoCgs, 24, 600, 100);
  std::ostringstream a, b;
  write_slot_csv(a, run_dynsim(f, w, RngSeed{5, 0}));
  write_slot_csv(b, run_dynsim(f, w, RngSeed{5, 0}));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("slot,matched,served_bytes,backlog\n", 0) == 0);
}

TEST_CASE("stability classification") {
  RunSummary s;
  s.normalized_throughput = 0.598;
  s.backlog_growth = 10.0;
  s.backlog_noise = 5.0;
  CHECK(is_stable(s, 0.6));
  s.backlog_growth = 20.0;
  CHECK_FALSE(is_stable(s, 0.6));
  s.backlog_growth = 10.0;
  s.normalized_throughput = 0.59;
  CHECK_FALSE(is_stable(s, 0.6));

  std::vector<StabilityRow> rows{{0.4, {}, true}, {0.5, {}, true}, {0.6, {}, false}, {0.7, {}, true}};
  CHECK(max_stable_load(rows) == 0.5);
  rows[0].stable = false;
  CHECK(max_stable_load(rows) == 0.0);
}

TEST_CASE("saturation matching fractions") {
  auto w = Workload::imc10_like(50000.0);
  w.set_load(0.85);
  const auto pim = run_dynsim(small_fabric(Algorithm::kOneRoundDcPim, 144, 3000, 1000), w, RngSeed{6, 0});
  CHECK(pim.mean_matching_fraction == doctest::Approx(0.633).epsilon(0.01 / 0.633));
  const auto cgs = run_dynsim(small_fabric(Algorithm::kTwoCgs, 144, 3000, 1000), w, RngSeed{6, 0});
  CHECK(cgs.mean_matching_fraction == doctest::Approx(0.731).epsilon(0.01 / 0.731));
}

TEST_CASE("stability sweep is independent of thread count") {
  auto w = Workload::imc10_like(50000.0);
  const auto f = small_fabric(Algorithm::kOneRoundDcPim, 16, 400, 100);
  const auto a = stability_sweep(f, w, {0.3, 0.5}, RngSeed{7, 0}, 1);
  const auto b = stability_sweep(f, w, {0.3, 0.5}, RngSeed{7, 0}, 2);
  REQUIRE(a.size() == 2);
  for (int i = 0; i < 2; ++i) {
    CHECK(a[i].summary.served_bytes == b[i].summary.served_bytes);
    CHECK(a[i].summary.arrived_load == b[i].summary.arrived_load);
  }
}
