#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypereval/hierarchy.hpp"
#include "hypereval/predictions.hpp"

namespace hypereval {

/// Classifier rows for one synset: `rows() x n_classes` values of one kind.
struct SampleRows {
  std::span<const float> values;
  std::size_t n_classes = 0;
  OutputKind kind = OutputKind::logits;

  std::size_t rows() const noexcept { return n_classes == 0 ? 0 : values.size() / n_classes; }
  std::span<const float> row(std::size_t i) const noexcept { return values.subspan(i * n_classes, n_classes); }
};

inline SampleRows sample_rows(const PredictionSet& set, const SynsetPredictions& p) {
  return {p.values, set.n_classes, set.kind};
}

struct SynsetMetrics {
  SynsetId synset;
  double isp = 0.0;
  /// Absent when the classifiable subtree has a single leaf.
  std::optional<double> scs;
  std::size_t n_samples = 0;
  std::size_t subtree_size = 0;
  /// Probability rows with zero subtree mass (replaced by uniform).
  std::size_t degenerate_rows = 0;

  friend bool operator==(const SynsetMetrics&, const SynsetMetrics&) = default;
};

/// Mean over samples of the full-distribution mass inside the subtree.
double in_subtree_probability(const SampleRows& rows, const ClassifiableSubtree& subtree);

/// Mean KL divergence (natural log) between each sample's hyponym
/// distribution and their average. Always computed, including singletons.
double coverage_divergence(const SampleRows& rows, const ClassifiableSubtree& subtree,
                           std::size_t* degenerate_rows = nullptr);

/// As `coverage_divergence`, but nullopt for single-leaf subtrees.
std::optional<double> subtree_coverage_score(const SampleRows& rows, const ClassifiableSubtree& subtree,
                                             std::size_t* degenerate_rows = nullptr);

SynsetMetrics evaluate_synset(const SampleRows& rows, const ClassifiableSubtree& subtree);

/// Which per-synset supremum the SCS normalizer averages.
enum class NormalizerBound {
  /// ln |A(s)|: reproduces the published constant on ImageNet-1k.
  subtree,
  /// ln min(n_samples, |A(s)|): the finite-sample ceiling.
  sample_capped,
};

/// How `evaluate` divides the aggregate SCS.
enum class NormalizerMode { derived, sample_capped, paper, none };

inline constexpr double kPublishedScsNormalizer = 1.624;

NormalizerMode parse_normalizer_mode(std::string_view text);
std::string_view to_string(NormalizerMode mode) noexcept;

/// Mean of the per-synset SCS supremum over evaluation synsets with more
/// than one leaf. Zero when no such synset exists.
double scs_normalizer(const HierarchyGraph& graph, std::size_t n_samples,
                      NormalizerBound bound = NormalizerBound::subtree);

struct MetricReport {
  std::string model_id;
  std::int64_t seed = 0;
  /// Samples per synset; nullopt for ragged inputs.
  std::optional<std::size_t> n_samples;
  std::vector<SynsetMetrics> synsets;  // sorted by synset

  double mean_isp = 0.0;
  double mean_scs = 0.0;
  double isp_normalizer = 1.0;
  double scs_normalizer = 1.0;
  std::string normalizer_mode = "none";
  double aggregate_isp = 0.0;
  double aggregate_scs = 0.0;

  std::size_t isp_count = 0;
  std::size_t scs_included = 0;
  std::size_t scs_excluded = 0;
  std::size_t degenerate_rows = 0;

  const SynsetMetrics* find(SynsetId s) const;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Averages ISP over every synset and SCS over synsets that have one, then
/// divides by the normalizers. Sorts by synset for a fixed summation order.
/// A non-positive SCS normalizer yields aggregate_scs = 0.
MetricReport aggregate(std::vector<SynsetMetrics> metrics, double scs_normalizer,
                       double isp_normalizer = 1.0);

/// As above, and throws ValidationError if any of `expected` is missing.
MetricReport aggregate(std::vector<SynsetMetrics> metrics, double scs_normalizer,
                       std::span<const SynsetId> expected, double isp_normalizer = 1.0);

struct EvaluateOptions {
  std::size_t jobs = 1;
  NormalizerMode normalizer = NormalizerMode::derived;
  /// Replaces the normalizer value for every mode except `none`.
  std::optional<double> normalizer_override;
};

/// Scores every evaluation synset of `graph`. Throws ValidationError naming
/// the first evaluation synset without predictions, or when the row length
/// does not match the leaf count.
std::vector<SynsetMetrics> evaluate_synsets(const HierarchyGraph& graph, const PredictionSet& predictions,
                                            std::size_t jobs = 1);

MetricReport evaluate(const HierarchyGraph& graph, const PredictionSet& predictions,
                      const EvaluateOptions& options = {});

}  // namespace hypereval
