#include "hypereval/hierarchy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "hypereval/error.hpp"

namespace hypereval {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> split_lemmas(std::string_view field) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    const auto bar = field.find('|', start);
    const auto piece = trim(field.substr(start, bar == std::string_view::npos ? bar : bar - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return out;
}

std::string location(std::string_view file, std::size_t line) {
  return std::string(file) + ":" + std::to_string(line) + ": ";
}

SynsetId parse_id(std::string_view token, std::string_view file, std::size_t line) {
  if (!SynsetId::valid(token)) {
    throw ValidationError(location(file, line) + "malformed synset id '" + std::string(token) + "'");
  }
  return SynsetId::parse(token);
}

// Calls fn(line_number, content) for every non-blank, non-comment line.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    fn(line_no, content);
  }
}

std::vector<HierarchyEdge> parse_edges(std::istream& in) {
  std::vector<HierarchyEdge> edges;
  for_each_record(in, [&](std::size_t line_no, std::string_view content) {
    const auto tokens = split_ws(content);
    if (tokens.size() != 2) {
      throw ValidationError(location("edges", line_no) + "expected '<child_wnid> <parent_wnid>'");
    }
    edges.push_back({parse_id(tokens[0], "edges", line_no), parse_id(tokens[1], "edges", line_no)});
  });
  return edges;
}

std::vector<LeafEntry> parse_leaf_map(std::istream& in) {
  std::vector<LeafEntry> leaves;
  for_each_record(in, [&](std::size_t line_no, std::string_view content) {
    const auto tokens = split_ws(content);
    if (tokens.size() < 2) {
      throw ValidationError(location("leaf map", line_no) +
                            "expected '<class_index> <wnid> <lemma1|lemma2|...>'");
    }
    LeafEntry entry;
    const auto [ptr, ec] = std::from_chars(tokens[0].data(), tokens[0].data() + tokens[0].size(),
                                           entry.class_index);
    if (ec != std::errc{} || ptr != tokens[0].data() + tokens[0].size()) {
      throw ValidationError(location("leaf map", line_no) + "bad class index '" +
                            std::string(tokens[0]) + "'");
    }
    entry.synset = parse_id(tokens[1], "leaf map", line_no);
    if (tokens.size() > 2) {
      const auto rest_begin = static_cast<std::size_t>(tokens[2].data() - content.data());
      entry.lemmas = split_lemmas(content.substr(rest_begin));
    }
    leaves.push_back(std::move(entry));
  });
  return leaves;
}

std::unordered_map<SynsetId, std::vector<std::string>> parse_lemma_file(std::istream& in) {
  std::unordered_map<SynsetId, std::vector<std::string>> out;
  for_each_record(in, [&](std::size_t line_no, std::string_view content) {
    const auto tokens = split_ws(content);
    if (tokens.empty()) return;
    const auto id = parse_id(tokens[0], "lemmas", line_no);
    std::vector<std::string> lemmas;
    if (tokens.size() > 1) {
      const auto rest_begin = static_cast<std::size_t>(tokens[1].data() - content.data());
      lemmas = split_lemmas(content.substr(rest_begin));
    }
    if (!out.emplace(id, std::move(lemmas)).second) {
      throw ValidationError(location("lemmas", line_no) + "duplicate synset " + id.str());
    }
  });
  return out;
}

std::string join_lemmas(std::span<const std::string> lemmas) {
  std::string out;
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    if (i) out += '|';
    out += lemmas[i];
  }
  return out;
}

}  // namespace

bool ClassifiableSubtree::contains(std::uint32_t class_index) const noexcept {
  return std::binary_search(leaf_indices.begin(), leaf_indices.end(), class_index);
}

HierarchyGraph HierarchyGraph::build(std::vector<HierarchyEdge> edges, std::vector<LeafEntry> leaves,
                                     std::unordered_map<SynsetId, std::vector<std::string>> extra_lemmas,
                                     const HierarchyLoadOptions& options) {
  if (leaves.empty()) throw ValidationError("leaf map declares no leaves");
  if (options.expected_leaf_count && leaves.size() != *options.expected_leaf_count) {
    throw ValidationError("leaf map declares " + std::to_string(leaves.size()) + " leaves, expected " +
                          std::to_string(*options.expected_leaf_count));
  }

  // Leaves: class indices must be a permutation of 0..n-1 and wnids unique.
  std::vector<const LeafEntry*> by_class(leaves.size(), nullptr);
  std::set<SynsetId> leaf_ids;
  for (const auto& leaf : leaves) {
    if (leaf.class_index >= leaves.size()) {
      throw ValidationError("class index " + std::to_string(leaf.class_index) + " of " +
                            leaf.synset.str() + " is out of range for " +
                            std::to_string(leaves.size()) + " leaves");
    }
    if (by_class[leaf.class_index] != nullptr) {
      throw ValidationError("duplicate class index " + std::to_string(leaf.class_index) + " (" +
                            by_class[leaf.class_index]->synset.str() + ", " + leaf.synset.str() + ")");
    }
    if (!leaf_ids.insert(leaf.synset).second) {
      throw ValidationError("synset " + leaf.synset.str() + " is mapped to more than one class index");
    }
    by_class[leaf.class_index] = &leaf;
  }

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& e : edges) {
    if (e.child == e.parent) {
      throw ValidationError("cycle detected: " + e.child.str() + " -> " + e.parent.str());
    }
  }

  HierarchyGraph g;
  {
    std::set<SynsetId> all(leaf_ids.begin(), leaf_ids.end());
    for (const auto& e : edges) {
      all.insert(e.child);
      all.insert(e.parent);
    }
    g.nodes_.assign(all.begin(), all.end());
  }
  const std::size_t n = g.nodes_.size();
  g.index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) g.index_.emplace(g.nodes_[i], i);
  g.parents_.resize(n);
  g.children_.resize(n);
  for (const auto& e : edges) {
    g.parents_[g.index_.at(e.child)].push_back(e.parent);
    g.children_[g.index_.at(e.parent)].push_back(e.child);
  }
  for (auto& c : g.children_) std::sort(c.begin(), c.end());
  g.edge_count_ = edges.size();

  // Iterative DFS along parent edges. The post-order lists every node after
  // all of its ancestors; a grey node on the stack closes a cycle.
  std::vector<std::uint8_t> colour(n, 0);
  std::vector<std::size_t> postorder;
  postorder.reserve(n);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (colour[start] != 0) continue;
    stack.emplace_back(start, 0);
    colour[start] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < g.parents_[node].size()) {
        const std::size_t p = g.index_.at(g.parents_[node][next++]);
        if (colour[p] == 1) {
          std::string path = g.nodes_[p].str();
          bool in_cycle = false;
          for (const auto& frame : stack) {
            if (frame.first == p) in_cycle = true;
            if (in_cycle && frame.first != p) path += " -> " + g.nodes_[frame.first].str();
          }
          path += " -> " + g.nodes_[p].str();
          throw ValidationError("cycle detected: " + path);
        }
        if (colour[p] == 0) {
          colour[p] = 1;
          stack.emplace_back(p, 0);
        }
      } else {
        colour[node] = 2;
        postorder.push_back(node);
        stack.pop_back();
      }
    }
  }

  // Leaves.
  g.class_of_node_.assign(n, -1);
  g.leaves_.reserve(leaves.size());
  g.lemmas_.resize(n);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto idx = g.index_.at(by_class[c]->synset);
    g.class_of_node_[idx] = static_cast<std::int64_t>(c);
    g.leaves_.push_back(by_class[c]->synset);
    g.lemmas_[idx] = by_class[c]->lemmas;
  }
  for (auto& [id, lemmas] : extra_lemmas) {
    const auto it = g.index_.find(id);
    if (it == g.index_.end()) continue;
    if (g.lemmas_[it->second].empty()) g.lemmas_[it->second] = std::move(lemmas);
  }

  // Subtrees: visit descendants before ancestors and push leaf sets upward.
  const std::size_t words = (leaves.size() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> bits(n, std::vector<std::uint64_t>(words, 0));
  for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
    const std::size_t node = *it;
    if (const auto c = g.class_of_node_[node]; c >= 0) {
      bits[node][static_cast<std::size_t>(c) / 64] |= std::uint64_t{1} << (c % 64);
    }
    for (const auto& p : g.parents_[node]) {
      auto& dst = bits[g.index_.at(p)];
      for (std::size_t w = 0; w < words; ++w) dst[w] |= bits[node][w];
    }
  }
  g.subtrees_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& st = g.subtrees_[i];
    st.synset = g.nodes_[i];
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t word = bits[i][w];
      while (word) {
        const int b = std::countr_zero(word);
        st.leaf_indices.push_back(static_cast<std::uint32_t>(w * 64 + static_cast<std::size_t>(b)));
        word &= word - 1;
      }
    }
    if (st.leaf_indices.empty()) {
      throw ValidationError("dangling edge endpoint " + g.nodes_[i].str() +
                            ": not an ancestor of any leaf");
    }
  }

  // Root: exactly one parentless node, and it must cover every leaf.
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.parents_[i].empty()) roots.push_back(i);
  }
  const auto main_root = *std::max_element(roots.begin(), roots.end(), [&](auto a, auto b) {
    return g.subtrees_[a].size() < g.subtrees_[b].size();
  });
  if (roots.size() != 1) {
    for (std::size_t c = 0; c < g.leaves_.size(); ++c) {
      if (!g.subtrees_[main_root].contains(static_cast<std::uint32_t>(c))) {
        std::string listing;
        for (const auto r : roots) listing += (listing.empty() ? "" : ", ") + g.nodes_[r].str();
        throw ValidationError("unreachable leaf " + g.leaves_[c].str() + ": no hypernym path to root " +
                              g.nodes_[main_root].str() + " (parentless nodes: " + listing + ")");
      }
    }
  }
  g.root_ = g.nodes_[main_root];

  // Shortest distance down to a leaf: multi-source BFS upward from leaves.
  g.leaf_distance_.assign(n, std::numeric_limits<std::uint32_t>::max());
  std::deque<std::size_t> queue;
  for (const auto& leaf : g.leaves_) {
    const auto idx = g.index_.at(leaf);
    g.leaf_distance_[idx] = 0;
    queue.push_back(idx);
  }
  while (!queue.empty()) {
    const auto node = queue.front();
    queue.pop_front();
    for (const auto& p : g.parents_[node]) {
      const auto pi = g.index_.at(p);
      if (g.leaf_distance_[pi] == std::numeric_limits<std::uint32_t>::max()) {
        g.leaf_distance_[pi] = g.leaf_distance_[node] + 1;
        queue.push_back(pi);
      }
    }
  }

  // Longest upward path (depth of the deepest leaf) over the topological order.
  std::vector<std::uint32_t> height(n, 0);
  for (const auto node : postorder) {
    for (const auto& p : g.parents_[node]) {
      height[node] = std::max(height[node], height[g.index_.at(p)] + 1);
    }
    g.max_depth_ = std::max(g.max_depth_, height[node]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (g.class_of_node_[i] < 0) g.evaluation_set_.push_back(g.nodes_[i]);
  }
  return g;
}

std::size_t HierarchyGraph::require(SynsetId s) const {
  const auto it = index_.find(s);
  if (it == index_.end()) throw ValidationError("unknown synset " + s.str());
  return it->second;
}

std::span<const SynsetId> HierarchyGraph::parents(SynsetId s) const { return parents_[require(s)]; }
std::span<const SynsetId> HierarchyGraph::children(SynsetId s) const { return children_[require(s)]; }
bool HierarchyGraph::is_leaf(SynsetId s) const { return class_of_node_[require(s)] >= 0; }

std::optional<std::uint32_t> HierarchyGraph::class_index(SynsetId s) const {
  const auto c = class_of_node_[require(s)];
  if (c < 0) return std::nullopt;
  return static_cast<std::uint32_t>(c);
}

std::span<const std::string> HierarchyGraph::lemmas(SynsetId s) const { return lemmas_[require(s)]; }
const ClassifiableSubtree& HierarchyGraph::subtree(SynsetId s) const { return subtrees_[require(s)]; }
std::uint32_t HierarchyGraph::leaf_distance(SynsetId s) const { return leaf_distance_[require(s)]; }

std::vector<HierarchyEdge> HierarchyGraph::edges() const {
  std::vector<HierarchyEdge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& p : parents_[i]) out.push_back({nodes_[i], p});
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool operator==(const HierarchyGraph& a, const HierarchyGraph& b) {
  return a.nodes_ == b.nodes_ && a.parents_ == b.parents_ && a.leaves_ == b.leaves_ &&
         a.lemmas_ == b.lemmas_ && a.root_ == b.root_;
}

HierarchyGraph parse_hierarchy(std::istream& edges, std::istream& leaf_map, std::istream* lemmas,
                               const HierarchyLoadOptions& options) {
  auto edge_list = parse_edges(edges);
  auto leaves = parse_leaf_map(leaf_map);
  std::unordered_map<SynsetId, std::vector<std::string>> extra;
  if (lemmas != nullptr) extra = parse_lemma_file(*lemmas);
  return HierarchyGraph::build(std::move(edge_list), std::move(leaves), std::move(extra), options);
}

HierarchyGraph load_hierarchy(const std::filesystem::path& edge_file,
                              const std::filesystem::path& leaf_map_file,
                              const std::optional<std::filesystem::path>& lemma_file,
                              const HierarchyLoadOptions& options) {
  std::ifstream edges(edge_file);
  if (!edges) throw IoError("cannot open edge file " + edge_file.string());
  std::ifstream leaf_map(leaf_map_file);
  if (!leaf_map) throw IoError("cannot open leaf map " + leaf_map_file.string());
  std::ifstream lemmas;
  if (lemma_file) {
    lemmas.open(*lemma_file);
    if (!lemmas) throw IoError("cannot open lemma file " + lemma_file->string());
  }
  return parse_hierarchy(edges, leaf_map, lemma_file ? &lemmas : nullptr, options);
}

std::vector<SynsetId> evaluation_set(const HierarchyGraph& graph) {
  const auto s = graph.evaluation_set();
  return {s.begin(), s.end()};
}

ClassifiableSubtree classifiable_subtree(const HierarchyGraph& graph, SynsetId s) {
  return graph.subtree(s);
}

std::vector<SynsetId> synsets_within_leaf_distance(const HierarchyGraph& graph,
                                                   std::uint32_t max_distance) {
  std::vector<SynsetId> out;
  for (const auto s : graph.evaluation_set()) {
    if (graph.leaf_distance(s) <= max_distance) out.push_back(s);
  }
  return out;
}

std::string display_lemma(std::string_view lemma) {
  std::string out(lemma);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string prompt_for_lemma(std::string_view lemma) {
  const std::string shown = display_lemma(lemma);
  const char first = shown.empty() ? '\0' : static_cast<char>(std::tolower(static_cast<unsigned char>(shown[0])));
  const bool vowel = first == 'a' || first == 'e' || first == 'i' || first == 'o' || first == 'u';
  return std::string("An image of ") + (vowel ? "an " : "a ") + shown + ".";
}

PromptManifest prompt_manifest(const HierarchyGraph& graph) {
  PromptManifest manifest;
  manifest.entries.reserve(graph.evaluation_set().size());
  for (const auto s : graph.evaluation_set()) {
    const auto lemmas = graph.lemmas(s);
    if (lemmas.empty()) throw ValidationError("synset " + s.str() + " has no lemma");
    manifest.entries.push_back({s, display_lemma(lemmas.front()), prompt_for_lemma(lemmas.front())});
  }
  return manifest;
}

void write_prompt_manifest(const PromptManifest& manifest, std::ostream& out) {
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json row;
    row["synset"] = e.synset.str();
    row["lemma"] = e.lemma;
    row["prompt"] = e.prompt;
    out << row.dump() << '\n';
  }
}

void write_edge_file(const HierarchyGraph& graph, std::ostream& out) {
  out << "# child_wnid parent_wnid\n";
  for (const auto& e : graph.edges()) out << e.child << ' ' << e.parent << '\n';
}

void write_leaf_map(const HierarchyGraph& graph, std::ostream& out) {
  const auto leaves = graph.leaves();
  for (std::size_t c = 0; c < leaves.size(); ++c) {
    out << c << ' ' << leaves[c] << ' ' << join_lemmas(graph.lemmas(leaves[c])) << '\n';
  }
}

void write_lemma_file(const HierarchyGraph& graph, std::ostream& out) {
  for (const auto s : graph.evaluation_set()) {
    const auto lemmas = graph.lemmas(s);
    if (lemmas.empty()) continue;
    out << s << ' ' << join_lemmas(lemmas) << '\n';
  }
}

}  // namespace hypereval
