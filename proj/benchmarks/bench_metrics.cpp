#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "hypereval/metrics.hpp"
#include "hypereval/simulator.hpp"

namespace hypereval {
namespace {

void BM_Evaluate(benchmark::State& state) {
  const auto graph = bench::layered_hierarchy();
  CompetenceProfile profile;
  profile.kind = ProfileKind::mixture;
  const auto preds = simulate(graph, profile, 32, {4, "bench"});
  EvaluateOptions options;
  options.jobs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(graph, preds, options));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(preds.total_rows()));
}
BENCHMARK(BM_Evaluate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto graph = bench::layered_hierarchy();
  CompetenceProfile profile;
  profile.kind = ProfileKind::mixture;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(graph, profile, 32, {static_cast<std::size_t>(state.range(0)), "bench"}));
  }
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Normalizer(benchmark::State& state) {
  const auto graph = bench::layered_hierarchy();
  for (auto _ : state) benchmark::DoNotOptimize(scs_normalizer(graph, 32));
}
BENCHMARK(BM_Normalizer);

}  // namespace
}  // namespace hypereval

BENCHMARK_MAIN();
