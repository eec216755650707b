#include <benchmark/benchmark.h>

#include <filesystem>
#include <sstream>

#include "bench_common.hpp"
#include "hypereval/predictions.hpp"
#include "hypereval/simulator.hpp"

namespace hypereval {
namespace {

const PredictionSet& sample_set() {
  static const PredictionSet set = [] {
    const auto graph = bench::layered_hierarchy();
    CompetenceProfile profile;
    profile.kind = ProfileKind::mixture;
    return simulate(graph, profile, 8, {4, "bench"});
  }();
  return set;
}

std::filesystem::path saved(PredictionFormat format) {
  const auto path = std::filesystem::temp_directory_path() /
                    (format == PredictionFormat::binary ? "hypereval_bench.bin" : "hypereval_bench.jsonl");
  save_predictions(sample_set(), path, format);
  return path;
}

void BM_LoadBinary(benchmark::State& state) {
  const auto path = saved(PredictionFormat::binary);
  for (auto _ : state) benchmark::DoNotOptimize(load_predictions(path));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(std::filesystem::file_size(path)));
}
BENCHMARK(BM_LoadBinary)->Unit(benchmark::kMillisecond);

void BM_LoadJsonl(benchmark::State& state) {
  const auto path = saved(PredictionFormat::jsonl);
  PredictionLoadOptions options;
  options.jobs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(load_predictions(path, options));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(std::filesystem::file_size(path)));
}
BENCHMARK(BM_LoadJsonl)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hypereval

BENCHMARK_MAIN();
