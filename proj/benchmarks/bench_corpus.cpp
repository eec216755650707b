#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "bench_common.hpp"
#include "hypereval/corpus.hpp"

namespace hypereval {
namespace {

std::string captions(const HierarchyGraph& graph, std::size_t bytes) {
  const std::vector<std::string> words{"a", "photo", "of", "the", "with", "on", "red", "small", "near", "two"};
  std::mt19937_64 rng(1);
  std::string text;
  while (text.size() < bytes) {
    for (int w = 0; w < 8; ++w) text += words[rng() % words.size()] + ' ';
    if (rng() % 2) text += display_lemma(graph.lemmas(graph.leaves()[rng() % graph.leaf_count()]).front());
    text += '\n';
  }
  return text;
}

void BM_CountText(benchmark::State& state) {
  const auto graph = bench::layered_hierarchy();
  CountPolicy policy;
  policy.mode = state.range(0) ? CountMode::per_occurrence : CountMode::per_caption;
  const ConceptCounter counter(graph, policy);
  const auto text = captions(graph, 16u << 20);
  for (auto _ : state) benchmark::DoNotOptimize(counter.count_text(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_CountText)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BuildCounter(benchmark::State& state) {
  const auto graph = bench::layered_hierarchy();
  for (auto _ : state) benchmark::DoNotOptimize(ConceptCounter(graph, {}));
}
BENCHMARK(BM_BuildCounter)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hypereval

BENCHMARK_MAIN();
