#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypereval/synset_id.hpp"

namespace hypereval {

/// Leaves reachable downward from a synset, as sorted ImageNet class indices.
struct ClassifiableSubtree {
  SynsetId synset;
  std::vector<std::uint32_t> leaf_indices;

  std::size_t size() const noexcept { return leaf_indices.size(); }
  bool contains(std::uint32_t class_index) const noexcept;

  friend bool operator==(const ClassifiableSubtree&, const ClassifiableSubtree&) = default;
};

struct HierarchyEdge {
  SynsetId child;
  SynsetId parent;

  friend auto operator<=>(const HierarchyEdge&, const HierarchyEdge&) = default;
};

struct LeafEntry {
  std::uint32_t class_index = 0;
  SynsetId synset;
  std::vector<std::string> lemmas;
};

struct HierarchyLoadOptions {
  /// Number of leaves the mapping must declare; nullopt accepts any count.
  std::optional<std::size_t> expected_leaf_count = 1000;
};

/// Hypernym DAG restricted to the ancestors of a fixed, ordered leaf set.
///
/// Immutable once built. Classifiable subtrees, leaf distances and the
/// evaluation set are computed eagerly, so every accessor is a lookup and the
/// object can be shared across threads.
class HierarchyGraph {
 public:
  /// Validates and builds. Throws ValidationError on cycles, wrong leaf count,
  /// duplicate class indices, dangling nodes, or leaves that cannot reach the
  /// unique root.
  static HierarchyGraph build(std::vector<HierarchyEdge> edges, std::vector<LeafEntry> leaves,
                              std::unordered_map<SynsetId, std::vector<std::string>> extra_lemmas,
                              const HierarchyLoadOptions& options = {});

  /// All nodes, sorted.
  std::span<const SynsetId> nodes() const noexcept { return nodes_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  bool contains(SynsetId s) const noexcept { return index_.count(s) != 0; }

  std::span<const SynsetId> parents(SynsetId s) const;
  std::span<const SynsetId> children(SynsetId s) const;

  /// Leaves in class-index order.
  std::span<const SynsetId> leaves() const noexcept { return leaves_; }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  bool is_leaf(SynsetId s) const;
  std::optional<std::uint32_t> class_index(SynsetId s) const;

  SynsetId root() const noexcept { return root_; }

  /// Lemmas in file order; empty when none were supplied.
  std::span<const std::string> lemmas(SynsetId s) const;

  /// Throws ValidationError for unknown synsets.
  const ClassifiableSubtree& subtree(SynsetId s) const;

  /// Strict ancestors of leaves, leaves excluded, sorted.
  std::span<const SynsetId> evaluation_set() const noexcept { return evaluation_set_; }

  /// Length of the shortest downward path to any leaf (0 for leaves).
  std::uint32_t leaf_distance(SynsetId s) const;

  /// Longest upward path from any leaf to the root, in edges.
  std::uint32_t max_depth() const noexcept { return max_depth_; }

  /// Edges sorted by (child, parent).
  std::vector<HierarchyEdge> edges() const;

  friend bool operator==(const HierarchyGraph& a, const HierarchyGraph& b);

 private:
  std::size_t require(SynsetId s) const;

  std::vector<SynsetId> nodes_;
  std::unordered_map<SynsetId, std::size_t> index_;
  std::vector<std::vector<SynsetId>> parents_;
  std::vector<std::vector<SynsetId>> children_;
  std::vector<std::vector<std::string>> lemmas_;
  std::vector<ClassifiableSubtree> subtrees_;
  std::vector<std::uint32_t> leaf_distance_;
  std::vector<std::int64_t> class_of_node_;
  std::vector<SynsetId> leaves_;
  std::vector<SynsetId> evaluation_set_;
  SynsetId root_;
  std::size_t edge_count_ = 0;
  std::uint32_t max_depth_ = 0;
};

/// Parses the edge file (`child parent` per line), the leaf map
/// (`class_index wnid lemma1|lemma2`) and an optional lemma file
/// (`wnid lemma1|lemma2`) for non-leaf synsets.
HierarchyGraph load_hierarchy(const std::filesystem::path& edge_file,
                              const std::filesystem::path& leaf_map_file,
                              const std::optional<std::filesystem::path>& lemma_file = std::nullopt,
                              const HierarchyLoadOptions& options = {});

/// Same formats, read from streams; `origin` prefixes error messages.
HierarchyGraph parse_hierarchy(std::istream& edges, std::istream& leaf_map, std::istream* lemmas,
                               const HierarchyLoadOptions& options = {});

std::vector<SynsetId> evaluation_set(const HierarchyGraph& graph);
ClassifiableSubtree classifiable_subtree(const HierarchyGraph& graph, SynsetId s);

/// Evaluation synsets whose closest leaf is at most `max_distance` edges below.
std::vector<SynsetId> synsets_within_leaf_distance(const HierarchyGraph& graph,
                                                   std::uint32_t max_distance);

struct PromptEntry {
  SynsetId synset;
  std::string lemma;
  std::string prompt;
};

struct PromptManifest {
  std::vector<PromptEntry> entries;
};

/// "green_lizard" -> "green lizard".
std::string display_lemma(std::string_view lemma);

/// "An image of {a|an} {lemma}." with the article picked by the leading
/// letter (a, e, i, o, u, case-insensitive) of the displayed lemma.
std::string prompt_for_lemma(std::string_view lemma);

/// One entry per evaluation synset, using its first lemma. Throws
/// ValidationError when an evaluation synset has no lemma.
PromptManifest prompt_manifest(const HierarchyGraph& graph);

void write_prompt_manifest(const PromptManifest& manifest, std::ostream& out);

void write_edge_file(const HierarchyGraph& graph, std::ostream& out);
void write_leaf_map(const HierarchyGraph& graph, std::ostream& out);
/// Lemmas of non-leaf synsets; leaf lemmas live in the leaf map.
void write_lemma_file(const HierarchyGraph& graph, std::ostream& out);

}  // namespace hypereval
