#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypereval/hierarchy.hpp"
#include "hypereval/synset_id.hpp"

namespace hypereval {

enum class OutputKind : std::uint8_t { logits = 0, probabilities = 1 };

std::string_view to_string(OutputKind kind) noexcept;
OutputKind parse_output_kind(std::string_view text);

/// Tolerance on probability rows summing to one.
inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Classifier outputs for the samples generated from one synset prompt.
struct SynsetPredictions {
  std::vector<std::uint32_t> sample_indices;  // ascending
  std::vector<float> values;                  // row-major, one row per sample

  std::size_t rows() const noexcept { return sample_indices.size(); }
  std::span<const float> row(std::size_t i, std::size_t n_classes) const noexcept {
    return std::span<const float>(values).subspan(i * n_classes, n_classes);
  }

  friend bool operator==(const SynsetPredictions&, const SynsetPredictions&) = default;
};

struct PredictionSet {
  std::string model_id;
  std::int64_t seed = 0;
  OutputKind kind = OutputKind::logits;
  std::size_t n_classes = 0;
  std::map<SynsetId, SynsetPredictions> synsets;

  const SynsetPredictions* find(SynsetId s) const;
  std::size_t total_rows() const noexcept;
  /// Row count shared by every synset; nullopt for ragged sets.
  std::optional<std::size_t> uniform_rows() const noexcept;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// Accumulates validated rows; `finish` orders samples and checks shape.
class PredictionSetBuilder {
 public:
  PredictionSetBuilder(OutputKind kind, std::size_t n_classes);

  /// Throws ValidationError on wrong length, non-finite values or a
  /// probability row failing the sum check. `where` prefixes messages.
  void add(SynsetId synset, std::uint32_t sample, std::span<const float> values,
           std::string_view where = {});

  /// Throws ValidationError on duplicate (synset, sample) pairs and, unless
  /// `allow_ragged`, on differing per-synset sample counts.
  PredictionSet finish(std::string model_id, std::int64_t seed, bool allow_ragged = false) &&;

  OutputKind kind() const noexcept { return kind_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

 private:
  struct Pending {
    std::vector<std::uint32_t> samples;
    std::vector<float> values;
  };
  OutputKind kind_;
  std::size_t n_classes_;
  std::map<SynsetId, Pending> pending_;
};

enum class PredictionFormat { jsonl, binary };

struct PredictionLoadOptions {
  /// Required row length; nullopt takes it from the first row.
  std::optional<std::size_t> n_classes;
  /// Overrides the model id (default: JSONL header or file stem).
  std::optional<std::string> model_id;
  bool allow_ragged = false;
  std::size_t jobs = 1;
};

/// Detects the format from the leading magic bytes.
PredictionFormat detect_prediction_format(const std::filesystem::path& path);

PredictionSet load_predictions(const std::filesystem::path& path, const PredictionLoadOptions& options = {});
PredictionSet load_predictions_jsonl(std::istream& in, const PredictionLoadOptions& options = {});
PredictionSet load_predictions_binary(std::istream& in, const PredictionLoadOptions& options = {});

/// JSONL: optional header object (`model_id`, `seed`, `kind`) then one object
/// per sample. Floats are written in shortest round-trip form.
void write_predictions_jsonl(const PredictionSet& set, std::ostream& out);

/// Little-endian: "HLPR", u16 version, u8 kind, u32 n_classes, u64 records;
/// then per record u64 synset offset, u32 sample index, n_classes float32.
void write_predictions_binary(const PredictionSet& set, std::ostream& out);

void save_predictions(const PredictionSet& set, const std::filesystem::path& path, PredictionFormat format);

/// p(y|x) over all classes: stable softmax of logits, or the row itself.
std::vector<double> full_distribution(std::span<const float> row, OutputKind kind);
std::vector<double> full_distribution(std::span<const double> row, OutputKind kind);

/// p_s(y|x): the distribution conditioned on y lying in the subtree, ordered
/// like `subtree.leaf_indices`. A probability row with zero subtree mass maps
/// to the uniform distribution and increments `*degenerate_rows`.
std::vector<double> hyponym_distribution(std::span<const float> row, OutputKind kind,
                                         const ClassifiableSubtree& subtree,
                                         std::size_t* degenerate_rows = nullptr);
std::vector<double> hyponym_distribution(std::span<const double> row, OutputKind kind,
                                         const ClassifiableSubtree& subtree,
                                         std::size_t* degenerate_rows = nullptr);

/// Probability mass the full distribution assigns to the subtree.
double subtree_mass(std::span<const float> row, OutputKind kind, const ClassifiableSubtree& subtree);
double subtree_mass(std::span<const double> row, OutputKind kind, const ClassifiableSubtree& subtree);

}  // namespace hypereval
