#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypereval/hierarchy.hpp"

namespace hypereval {

struct WordNetNounSynset {
  SynsetId id;
  std::vector<std::string> lemmas;
  std::vector<SynsetId> hypernyms;
  std::vector<SynsetId> instance_hypernyms;
};

/// Noun synsets parsed from a Princeton WordNet `data.noun` file.
class WordNetNouns {
 public:
  static WordNetNouns parse(std::istream& data_noun);
  static WordNetNouns load(const std::filesystem::path& data_noun);

  std::size_t size() const noexcept { return synsets_.size(); }
  const WordNetNounSynset* find(SynsetId id) const;

 private:
  std::unordered_map<SynsetId, WordNetNounSynset> synsets_;
};

struct WordNetImportOptions {
  /// Follow `@i` pointers as well as `@`.
  bool include_instance_hypernyms = true;
};

/// Builds the hypernym closure above `leaves` (class-index order) with
/// lemmas for every node. Throws ValidationError for wnids missing from the
/// database.
HierarchyGraph import_wordnet_hierarchy(const WordNetNouns& nouns, std::span<const SynsetId> leaves,
                                        const WordNetImportOptions& options = {});

/// One wnid per line (first whitespace-separated token; `#` comments).
std::vector<SynsetId> read_wnid_list(const std::filesystem::path& path);

}  // namespace hypereval
