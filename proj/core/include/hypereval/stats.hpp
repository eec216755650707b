#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypereval/metrics.hpp"

namespace hypereval {

/// N x K probability rows with integer labels.
class LabeledPredictionSet {
 public:
  /// Throws ValidationError on bad row sums, negative entries or labels out of range.
  LabeledPredictionSet(std::size_t n_classes, std::vector<double> probabilities, std::vector<std::uint32_t> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(probabilities_).subspan(i * n_classes_, n_classes_);
  }
  std::uint32_t label(std::size_t i) const noexcept { return labels_[i]; }

 private:
  std::size_t n_classes_;
  std::vector<double> probabilities_;
  std::vector<std::uint32_t> labels_;
};

/// JSONL `{"label": k, "values": [...], "kind": "logits"|"probabilities"}`;
/// logit rows are converted with a stable softmax.
LabeledPredictionSet load_labeled_predictions(std::istream& in);
LabeledPredictionSet load_labeled_predictions(const std::filesystem::path& path);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> row) noexcept;

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double confidence = 0.0;  // mean max-probability in the bin
  double accuracy = 0.0;    // fraction of correct top-1 predictions
};

/// Equal-width bins on [0, 1], right-inclusive: bin b covers (b/B, (b+1)/B],
/// with confidence 0 falling into the first bin.
std::vector<CalibrationBin> calibration_curve(const LabeledPredictionSet& data, std::size_t n_bins = 100);

/// Expected calibration error: sum over bins of |bin|/N * |acc - conf|.
double expected_calibration_error(const LabeledPredictionSet& data, std::size_t n_bins = 100);

double top1_accuracy(const LabeledPredictionSet& data);

void write_calibration_csv(std::span<const CalibrationBin> bins, std::ostream& out);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

enum class SpearmanMethod {
  /// Exact permutation distribution for n <= kExactSpearmanMaxN, else t.
  automatic,
  /// Student-t with n - 2 degrees of freedom; |rho| = 1 gives p = 0.
  t_approximation,
  /// Enumerates every arrangement of the ranks; n <= kExactSpearmanMaxN.
  exact,
};

inline constexpr std::size_t kExactSpearmanMaxN = 10;

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Spearman rank correlation with a two-sided p-value. Throws
/// ValidationError on length mismatch, n < 3 or a constant input.
Correlation spearman(std::span<const double> x, std::span<const double> y,
                     SpearmanMethod method = SpearmanMethod::automatic);

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);

/// Items x raters categorical ratings; missing cells allowed.
class RatingMatrix {
 public:
  RatingMatrix(std::size_t items, std::size_t raters);

  void set(std::size_t item, std::size_t rater, int category);
  std::optional<int> get(std::size_t item, std::size_t rater) const;
  std::size_t items() const noexcept { return items_; }
  std::size_t raters() const noexcept { return raters_; }

 private:
  std::size_t items_;
  std::size_t raters_;
  std::vector<std::optional<int>> cells_;
};

/// Reads `item,rater,category` CSV (header optional). Items, raters and
/// categories are arbitrary strings, numbered in order of appearance.
RatingMatrix load_ratings_csv(std::istream& in);
RatingMatrix load_ratings_csv(const std::filesystem::path& path);

/// Nominal Krippendorff's alpha from the coincidence matrix. Throws
/// ValidationError when no item has two or more ratings. Returns 1 when
/// observed disagreement is zero.
double krippendorff_alpha_nominal(const RatingMatrix& ratings);

enum class MetricKind { isp, scs };
MetricKind parse_metric_kind(std::string_view text);
std::string_view to_string(MetricKind kind) noexcept;

struct PairCorrelation {
  std::size_t first = 0;
  std::size_t second = 0;
  Correlation correlation;
};

struct SeedStability {
  double mean_rho = 0.0;
  std::vector<PairCorrelation> pairs;
};

/// Spearman correlation of per-synset metrics for every unordered pair of
/// reports; synsets lacking SCS in either report are dropped pairwise.
/// Throws ValidationError when the reports cover different synsets.
SeedStability pairwise_seed_correlation(std::span<const MetricReport> reports, MetricKind metric);

}  // namespace hypereval
