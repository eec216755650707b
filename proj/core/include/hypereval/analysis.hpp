#pragma once

#include <span>
#include <vector>

#include "hypereval/embeddings.hpp"
#include "hypereval/hierarchy.hpp"
#include "hypereval/metrics.hpp"
#include "hypereval/stats.hpp"

namespace hypereval {

struct RankedSynset {
  SynsetId synset;
  double value = 0.0;

  friend bool operator==(const RankedSynset&, const RankedSynset&) = default;
};

/// The `k` lowest-scoring synsets, ascending, ties by SynsetId. SCS skips
/// excluded synsets. `k` is clamped to what is available; k = 0 is an error.
std::vector<RankedSynset> worst_synsets(const MetricReport& report, MetricKind metric, std::size_t k);

/// As above on the per-synset mean across reports. Only synsets scored in
/// every report take part.
std::vector<RankedSynset> worst_synsets(std::span<const MetricReport> reports, MetricKind metric, std::size_t k);

/// Highest first; the exact reverse of `worst_synsets` with k = all.
std::vector<RankedSynset> best_synsets(const MetricReport& report, MetricKind metric, std::size_t k);

struct DiffSummary {
  double mean = 0.0;
  double min = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  double max = 0.0;
};

struct ModelDiff {
  /// (synset, a - b), largest difference first, ties by SynsetId.
  std::vector<RankedSynset> ranked;
  DiffSummary summary;
};

/// Per-synset a - b. Throws ValidationError when the reports cover different
/// synsets. SCS compares synsets scored in both reports.
ModelDiff model_diff(const MetricReport& a, const MetricReport& b, MetricKind metric);

/// Linear-interpolation quantile of sorted data (type 7).
double quantile_sorted(std::span<const double> sorted, double q);

struct SubtreeAggregate {
  SynsetId root;
  std::size_t n_synsets = 0;
  std::size_t n_scs = 0;
  double mean_isp = 0.0;
  double mean_scs = 0.0;
  double aggregate_isp = 0.0;
  double aggregate_scs = 0.0;
};

/// Averages over every evaluation synset reachable downward from each root,
/// root included, divided by the report's normalizers. Throws
/// ValidationError for roots outside the evaluation set or the report.
std::vector<SubtreeAggregate> subtree_report(const MetricReport& report, const HierarchyGraph& graph,
                                             std::span<const SynsetId> roots);

/// Evaluation synsets below `root` (inclusive), sorted.
std::vector<SynsetId> evaluation_descendants(const HierarchyGraph& graph, SynsetId root);

struct HyponymSimilarity {
  SynsetId synset;
  double mean_cosine = 0.0;
  std::size_t leaves_used = 0;
  std::size_t leaves_missing = 0;
};

struct SimilarityResult {
  std::vector<HyponymSimilarity> values;  // sorted by synset
  /// Evaluation synsets with no vector of their own or for any leaf.
  std::vector<SynsetId> skipped;
};

/// Mean cosine between each evaluation synset and the leaves of A(s) that
/// have vectors.
SimilarityResult hyponym_similarity(const EmbeddingTable& embeddings, const HierarchyGraph& graph);

Correlation similarity_metric_correlation(std::span<const HyponymSimilarity> similarities, const MetricReport& report,
                                          MetricKind metric, SpearmanMethod method = SpearmanMethod::automatic);

}  // namespace hypereval
