#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hypereval/hierarchy.hpp"
#include "hypereval/predictions.hpp"

namespace hypereval::testing {

std::filesystem::path data_dir();
/// Imported real hierarchy (edges.txt, leaves.txt, lemmas.txt), if fetched.
std::filesystem::path imagenet_dir();

/// 11-node fixture in tests/data: 5 leaves, 6 evaluation synsets, one of
/// them a singleton, one leaf with two parents.
HierarchyGraph toy_graph();
std::vector<std::string> toy_graph_args();

std::optional<HierarchyGraph> imagenet_graph();
std::vector<std::string> imagenet_graph_args();

struct RandomHierarchy {
  std::vector<HierarchyEdge> edges;
  std::vector<LeafEntry> leaves;
  HierarchyGraph graph;
};

/// Random DAG with 2..max_leaves leaves and up to max_internal internal
/// nodes, some with two parents. Internal nodes without leaves are pruned.
RandomHierarchy random_hierarchy(std::mt19937_64& rng, std::size_t max_leaves = 10, std::size_t max_internal = 6);

/// Layered DAG over `leaf_count` leaves with about 5% extra parent edges.
/// Lemmas are `concept_<k>` / `leafname_<k>` so no lemma contains another.
HierarchyGraph synthetic_hierarchy(std::size_t leaf_count = 1000, std::uint64_t seed = 7);

/// The real hierarchy when fetched, otherwise the synthetic one.
HierarchyGraph imagenet_or_synthetic(std::string* label = nullptr);

/// Leaf class indices below `s`, by direct traversal of `edges`.
std::set<std::uint32_t> oracle_subtree(const std::vector<HierarchyEdge>& edges, const std::vector<LeafEntry>& leaves,
                                       SynsetId s);

/// Straight-line ISP: mean over rows of the full-distribution mass in `subtree`,
/// capped at 1.
long double oracle_isp(const std::vector<std::vector<double>>& rows, OutputKind kind,
                       const std::set<std::uint32_t>& subtree);

/// Straight-line SCS: mean KL(p_i || mean_j p_j) over conditional rows.
long double oracle_scs(const std::vector<std::vector<double>>& rows, OutputKind kind,
                       const std::set<std::uint32_t>& subtree);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace hypereval::testing
