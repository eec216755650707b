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
#include "hypereval/metrics.hpp"
#include "hypereval/pattern_matcher.hpp"
#include "hypereval/stats.hpp"

namespace hypereval {

enum class CountMode {
  /// A caption adds at most one to each synset.
  per_caption,
  per_occurrence,
};

enum class LemmaPolicy { first, all };

struct CountPolicy {
  CountMode mode = CountMode::per_caption;
  LemmaPolicy lemmas = LemmaPolicy::first;
  /// 0-based tab-separated column holding the caption; whole line if unset.
  std::optional<std::size_t> tsv_column;

  /// e.g. "per-caption,first-lemma,line"
  std::string descriptor() const;
};

CountMode parse_count_mode(std::string_view text);
LemmaPolicy parse_lemma_policy(std::string_view text);

struct ConceptCountTable {
  std::string corpus_id;
  std::string policy;
  std::uint64_t n_captions = 0;
  std::uint64_t n_bytes = 0;
  /// Set when a shard could not be read; its name is in `failed_shards`.
  bool partial = false;
  std::vector<std::string> failed_shards;
  /// Every counted synset, including zero counts.
  std::map<SynsetId, std::uint64_t> counts;
  /// Display lemma per synset.
  std::map<SynsetId, std::string> lemmas;

  /// Sums counts and sizes. Throws ValidationError on differing policies.
  void merge(const ConceptCountTable& other);

  friend bool operator==(const ConceptCountTable&, const ConceptCountTable&) = default;
};

/// Matches lemmas of every evaluation synset and every leaf as
/// case-insensitive, word-delimited phrases. Immutable once built, so one
/// instance can serve many threads.
class ConceptCounter {
 public:
  ConceptCounter(const HierarchyGraph& graph, CountPolicy policy);

  const CountPolicy& policy() const noexcept { return policy_; }
  const PatternMatcher& matcher() const noexcept { return matcher_; }
  std::span<const SynsetId> synsets() const noexcept { return synsets_; }

  ConceptCountTable empty_table(std::string corpus_id = {}) const;

  /// Counts one caption (no newline) into `table`.
  void count_caption(std::string_view caption, ConceptCountTable& table) const;

  /// Line-oriented stream; a trailing line without newline counts.
  ConceptCountTable count_stream(std::istream& in, std::string corpus_id = {}) const;
  ConceptCountTable count_text(std::string_view text, std::string corpus_id = {}) const;

  /// Plain or gzip file (detected by content). Throws IoError when unreadable.
  ConceptCountTable count_file(const std::filesystem::path& path) const;

  /// Shards on up to `jobs` worker threads. Unreadable shards are skipped and
  /// set `partial`; the merged result is independent of `jobs`.
  ConceptCountTable count_shards(std::span<const std::filesystem::path> shards, std::size_t jobs = 1,
                                 std::string corpus_id = {}) const;

 private:
  class Session;

  CountPolicy policy_;
  std::vector<SynsetId> synsets_;
  std::vector<std::string> display_;
  PatternMatcher matcher_;
  std::vector<std::uint32_t> pattern_length_;
  // Synset slots hit by each pattern, CSR layout.
  std::vector<std::uint32_t> target_offsets_;
  std::vector<std::uint32_t> targets_;
};

/// Convenience wrapper: build a counter and count `shards`.
ConceptCountTable count_concepts(std::span<const std::filesystem::path> shards, const HierarchyGraph& graph,
                                 const CountPolicy& policy = {}, std::size_t jobs = 1);

/// `synset,lemma,count` sorted by synset.
void write_counts_csv(const ConceptCountTable& table, std::ostream& out);
ConceptCountTable read_counts_csv(std::istream& in);
ConceptCountTable load_counts_csv(const std::filesystem::path& path);
void write_counts_summary(const ConceptCountTable& table, std::ostream& out);

/// Spearman correlation between counts and a metric over synsets present in
/// both; SCS-excluded synsets are dropped. Throws ValidationError when fewer
/// than three synsets overlap.
Correlation frequency_correlation(const ConceptCountTable& counts, const MetricReport& report, MetricKind metric,
                                  SpearmanMethod method = SpearmanMethod::automatic);

}  // namespace hypereval
