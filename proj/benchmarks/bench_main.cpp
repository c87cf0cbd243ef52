#include <benchmark/benchmark.h>

#include "dbmatch/dynsim.hpp"
#include "dbmatch/graph.hpp"
#include "dbmatch/matching.hpp"
#include "dbmatch/theory.hpp"
#include "dbmatch/thinning.hpp"

using namespace dbmatch;

namespace {

void BM_GenerateDout(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  std::uint64_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_dout(n, DegreeSpec::binomial(n, 8.0 / n), RngSeed{1, r++}));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GenerateDout)->Arg(144)->Arg(1024);

void BM_RunRound(benchmark::State& state) {
  const auto g = generate_dout(144, DegreeSpec::binomial(144, 8.0 / 144), RngSeed{2, 0});
  SelectionRule rule = SelectionRule::uniform();
  if (state.range(0) == 1) rule = SelectionRule::greedy();
  if (state.range(0) == 2) rule = SelectionRule::db(-2.0);
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_round(g, rule, RngSeed{3, r++}));
}
BENCHMARK(BM_RunRound)->ArgName("rule")->Arg(0)->Arg(1)->Arg(2);

void BM_ThinMaxK(benchmark::State& state) {
  const auto g = generate_dout(144, DegreeSpec::deterministic(8), RngSeed{4, 0});
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(thin(g, ThinningPolicy::max_k(2), RngSeed{5, r++}));
}
BENCHMARK(BM_ThinMaxK);

void BM_IslipRound(benchmark::State& state) {
  const auto g = generate_dout(144, DegreeSpec::binomial(144, 8.0 / 144), RngSeed{6, 0});
  IslipState st(144);
  for (auto _ : state) benchmark::DoNotOptimize(islip_round(g, st));
}
BENCHMARK(BM_IslipRound);

void BM_MaxMatching(benchmark::State& state) {
  const auto g = generate_dout(144, DegreeSpec::binomial(144, 4.0 / 144), RngSeed{7, 0});
  for (auto _ : state) benchmark::DoNotOptimize(max_matching(g));
}
BENCHMARK(BM_MaxMatching);

void BM_GreedyBound(benchmark::State& state) {
  const auto deg = DegreeSpec::binomial(144, static_cast<double>(state.range(0)) / 144);
  for (auto _ : state) benchmark::DoNotOptimize(theory::mean_match_greedy_bound(deg));
}
BENCHMARK(BM_GreedyBound)->Arg(2)->Arg(10);

void BM_DynsimSlots(benchmark::State& state) {
  dynsim::FabricConfig f;
  f.algorithm = static_cast<dynsim::Algorithm>(state.range(0));
  f.horizon = 500;
  f.warmup = 100;
  auto w = dynsim::Workload::imc10_like(f.bdp());
  w.set_load(0.6);
  for (auto _ : state) benchmark::DoNotOptimize(dynsim::run_dynsim(f, w, RngSeed{8, 0}));
  state.SetItemsProcessed(state.iterations() * f.horizon);
}
BENCHMARK(BM_DynsimSlots)->ArgName("algo")->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
