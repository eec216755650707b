#include "hypereval/wordnet.hpp"

#include <charconv>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hypereval/error.hpp"

namespace hypereval {
namespace {

class Tokens {
 public:
  explicit Tokens(std::string_view line) : rest_(line) {}

  std::string_view next() {
    const auto start = rest_.find_first_not_of(' ');
    if (start == std::string_view::npos) return {};
    rest_ = rest_.substr(start);
    const auto end = rest_.find(' ');
    const auto tok = rest_.substr(0, end);
    rest_ = end == std::string_view::npos ? std::string_view{} : rest_.substr(end);
    return tok;
  }

 private:
  std::string_view rest_;
};

unsigned parse_number(std::string_view tok, int base, std::size_t line_no) {
  unsigned v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ValidationError("data.noun:" + std::to_string(line_no) + ": bad numeric field '" +
                          std::string(tok) + "'");
  }
  return v;
}

SynsetId offset_id(std::string_view tok, std::size_t line_no) {
  return SynsetId(parse_number(tok, 10, line_no));
}

}  // namespace

WordNetNouns WordNetNouns::parse(std::istream& in) {
  WordNetNouns out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // License preamble lines start with two spaces.
    if (line.empty() || line[0] == ' ') continue;
    Tokens t(line);
    WordNetNounSynset synset;
    synset.id = offset_id(t.next(), line_no);
    t.next();  // lex_filenum
    if (t.next() != "n") continue;
    const unsigned word_count = parse_number(t.next(), 16, line_no);
    for (unsigned i = 0; i < word_count; ++i) {
      synset.lemmas.emplace_back(t.next());
      t.next();  // lex_id
    }
    const unsigned pointer_count = parse_number(t.next(), 10, line_no);
    for (unsigned i = 0; i < pointer_count; ++i) {
      const auto symbol = t.next();
      const auto target = t.next();
      const auto pos = t.next();
      t.next();  // source/target
      if (pos != "n") continue;
      if (symbol == "@") synset.hypernyms.push_back(offset_id(target, line_no));
      if (symbol == "@i") synset.instance_hypernyms.push_back(offset_id(target, line_no));
    }
    const auto id = synset.id;
    out.synsets_.emplace(id, std::move(synset));
  }
  if (out.synsets_.empty()) throw ValidationError("data.noun contains no noun synsets");
  return out;
}

WordNetNouns WordNetNouns::load(const std::filesystem::path& data_noun) {
  std::ifstream in(data_noun);
  if (!in) throw IoError("cannot open WordNet data file " + data_noun.string());
  return parse(in);
}

const WordNetNounSynset* WordNetNouns::find(SynsetId id) const {
  const auto it = synsets_.find(id);
  return it == synsets_.end() ? nullptr : &it->second;
}

HierarchyGraph import_wordnet_hierarchy(const WordNetNouns& nouns, std::span<const SynsetId> leaves,
                                        const WordNetImportOptions& options) {
  std::vector<LeafEntry> leaf_entries;
  std::vector<HierarchyEdge> edges;
  std::unordered_map<SynsetId, std::vector<std::string>> lemmas;
  std::unordered_set<SynsetId> seen;
  std::deque<SynsetId> queue;

  const auto lookup = [&](SynsetId id) {
    const auto* s = nouns.find(id);
    if (s == nullptr) throw ValidationError("synset " + id.str() + " not found in WordNet data");
    return s;
  };

  for (std::size_t c = 0; c < leaves.size(); ++c) {
    const auto* s = lookup(leaves[c]);
    leaf_entries.push_back({static_cast<std::uint32_t>(c), s->id, s->lemmas});
    if (seen.insert(s->id).second) queue.push_back(s->id);
  }
  while (!queue.empty()) {
    const auto* s = lookup(queue.front());
    queue.pop_front();
    lemmas.emplace(s->id, s->lemmas);
    const auto visit = [&](SynsetId parent) {
      edges.push_back({s->id, parent});
      if (seen.insert(parent).second) queue.push_back(parent);
    };
    for (const auto p : s->hypernyms) visit(p);
    if (options.include_instance_hypernyms) {
      for (const auto p : s->instance_hypernyms) visit(p);
    }
  }
  HierarchyLoadOptions load_options;
  load_options.expected_leaf_count = std::nullopt;
  return HierarchyGraph::build(std::move(edges), std::move(leaf_entries), std::move(lemmas), load_options);
}

std::vector<SynsetId> read_wnid_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open wnid list " + path.string());
  std::vector<SynsetId> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token) || token[0] == '#') continue;
    if (!SynsetId::valid(token)) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed wnid '" +
                            token + "'");
    }
    out.push_back(SynsetId::parse(token));
  }
  return out;
}

}  // namespace hypereval
