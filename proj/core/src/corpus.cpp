#include "hypereval/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "hypereval/error.hpp"
#include "hypereval/parallel.hpp"

namespace hypereval {
namespace {

constexpr std::size_t kChunkBytes = 1 << 20;

std::string ascii_lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

std::string_view tsv_field(std::string_view line, std::size_t column) {
  for (std::size_t i = 0; i < column; ++i) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) return {};
    line.remove_prefix(tab + 1);
  }
  return line.substr(0, line.find('\t'));
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::string CountPolicy::descriptor() const {
  std::string out = mode == CountMode::per_caption ? "per-caption" : "per-occurrence";
  out += lemmas == LemmaPolicy::first ? ",first-lemma" : ",all-lemmas";
  out += tsv_column ? ",tsv-column-" + std::to_string(*tsv_column) : std::string(",line");
  return out;
}

CountMode parse_count_mode(std::string_view text) {
  if (text == "per-caption" || text == "caption") return CountMode::per_caption;
  if (text == "per-occurrence" || text == "occurrence") return CountMode::per_occurrence;
  throw UsageError("unknown count mode '" + std::string(text) + "' (per-caption, per-occurrence)");
}

LemmaPolicy parse_lemma_policy(std::string_view text) {
  if (text == "first") return LemmaPolicy::first;
  if (text == "all") return LemmaPolicy::all;
  throw UsageError("unknown lemma policy '" + std::string(text) + "' (first, all)");
}

void ConceptCountTable::merge(const ConceptCountTable& other) {
  if (policy != other.policy) {
    throw ValidationError("cannot merge counts made with policies '" + policy + "' and '" + other.policy + "'");
  }
  n_captions += other.n_captions;
  n_bytes += other.n_bytes;
  partial = partial || other.partial;
  failed_shards.insert(failed_shards.end(), other.failed_shards.begin(), other.failed_shards.end());
  for (const auto& [s, c] : other.counts) counts[s] += c;
  for (const auto& [s, l] : other.lemmas) lemmas.emplace(s, l);
}

// Per-stream mutable state: dense tallies indexed by synset slot.
class ConceptCounter::Session {
 public:
  explicit Session(const ConceptCounter& counter)
      : counter_(counter), tally_(counter.synsets_.size(), 0), last_seen_(counter.synsets_.size(), 0) {}

  void caption(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (counter_.policy_.tsv_column) line = tsv_field(line, *counter_.policy_.tsv_column);
    ++captions_;
    const bool per_caption = counter_.policy_.mode == CountMode::per_caption;
    const auto* offsets = counter_.target_offsets_.data();
    const auto* targets = counter_.targets_.data();
    const auto* lengths = counter_.pattern_length_.data();
    counter_.matcher_.scan(line, [&](std::uint32_t id, std::size_t end) {
      const std::size_t start = end - lengths[id];
      if (start > 0 && is_word_byte(static_cast<unsigned char>(line[start - 1]))) return;
      if (end < line.size() && is_word_byte(static_cast<unsigned char>(line[end]))) return;
      for (auto t = offsets[id]; t < offsets[id + 1]; ++t) {
        const auto slot = targets[t];
        if (per_caption) {
          if (last_seen_[slot] == captions_) continue;
          last_seen_[slot] = captions_;
        }
        ++tally_[slot];
      }
    });
  }

  void feed(const char* data, std::size_t size) {
    bytes_ += size;
    std::string_view chunk(data, size);
    while (!chunk.empty()) {
      const auto nl = chunk.find('\n');
      if (nl == std::string_view::npos) {
        carry_.append(chunk);
        return;
      }
      if (carry_.empty()) {
        caption(chunk.substr(0, nl));
      } else {
        carry_.append(chunk.substr(0, nl));
        caption(carry_);
        carry_.clear();
      }
      chunk.remove_prefix(nl + 1);
    }
  }

  void finish_into(ConceptCountTable& table) {
    if (!carry_.empty()) {
      caption(carry_);
      carry_.clear();
    }
    table.n_captions += captions_;
    table.n_bytes += bytes_;
    for (std::size_t i = 0; i < tally_.size(); ++i) table.counts[counter_.synsets_[i]] += tally_[i];
  }

 private:
  const ConceptCounter& counter_;
  std::vector<std::uint64_t> tally_;
  // Caption number (1-based) that last counted each slot.
  std::vector<std::uint64_t> last_seen_;
  std::uint64_t captions_ = 0;
  std::uint64_t bytes_ = 0;
  std::string carry_;
};

ConceptCounter::ConceptCounter(const HierarchyGraph& graph, CountPolicy policy) : policy_(std::move(policy)) {
  std::set<SynsetId> wanted(graph.evaluation_set().begin(), graph.evaluation_set().end());
  wanted.insert(graph.leaves().begin(), graph.leaves().end());

  std::map<std::string, std::uint32_t> pattern_ids;
  std::vector<std::string> patterns;
  std::vector<std::vector<std::uint32_t>> hits;
  for (const auto s : wanted) {
    const auto lemmas = graph.lemmas(s);
    if (lemmas.empty()) continue;
    const auto slot = static_cast<std::uint32_t>(synsets_.size());
    synsets_.push_back(s);
    display_.push_back(display_lemma(lemmas.front()));
    const std::size_t n = policy_.lemmas == LemmaPolicy::first ? 1 : lemmas.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto key = ascii_lower(display_lemma(lemmas[i]));
      if (key.empty()) continue;
      const auto [it, added] = pattern_ids.emplace(key, static_cast<std::uint32_t>(patterns.size()));
      if (added) {
        patterns.push_back(key);
        hits.emplace_back();
      }
      auto& h = hits[it->second];
      if (h.empty() || h.back() != slot) h.push_back(slot);
    }
  }

  matcher_ = PatternMatcher(patterns);
  pattern_length_.reserve(patterns.size());
  target_offsets_.reserve(patterns.size() + 1);
  target_offsets_.push_back(0);
  for (std::size_t id = 0; id < patterns.size(); ++id) {
    pattern_length_.push_back(static_cast<std::uint32_t>(patterns[id].size()));
    targets_.insert(targets_.end(), hits[id].begin(), hits[id].end());
    target_offsets_.push_back(static_cast<std::uint32_t>(targets_.size()));
  }
}

ConceptCountTable ConceptCounter::empty_table(std::string corpus_id) const {
  ConceptCountTable table;
  table.corpus_id = std::move(corpus_id);
  table.policy = policy_.descriptor();
  for (std::size_t i = 0; i < synsets_.size(); ++i) {
    table.counts.emplace(synsets_[i], 0);
    table.lemmas.emplace(synsets_[i], display_[i]);
  }
  return table;
}

void ConceptCounter::count_caption(std::string_view caption, ConceptCountTable& table) const {
  Session session(*this);
  session.caption(caption);
  session.finish_into(table);
}

ConceptCountTable ConceptCounter::count_stream(std::istream& in, std::string corpus_id) const {
  auto table = empty_table(std::move(corpus_id));
  Session session(*this);
  std::vector<char> buffer(kChunkBytes);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    const auto got = in.gcount();
    if (got <= 0) break;
    session.feed(buffer.data(), static_cast<std::size_t>(got));
  }
  if (in.bad()) throw IoError("read error in caption stream");
  session.finish_into(table);
  return table;
}

ConceptCountTable ConceptCounter::count_text(std::string_view text, std::string corpus_id) const {
  auto table = empty_table(std::move(corpus_id));
  Session session(*this);
  session.feed(text.data(), text.size());
  session.finish_into(table);
  return table;
}

ConceptCountTable ConceptCounter::count_file(const std::filesystem::path& path) const {
  // gzread passes uncompressed files through unchanged.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open shard " + path.string());
  gzbuffer(file, kChunkBytes);
  auto table = empty_table(path.filename().string());
  Session session(*this);
  std::vector<char> buffer(kChunkBytes);
  for (;;) {
    const int got = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()));
    if (got < 0) {
      int code = 0;
      const std::string message = gzerror(file, &code);
      gzclose(file);
      throw IoError("cannot read shard " + path.string() + ": " + message);
    }
    if (got == 0) break;
    session.feed(buffer.data(), static_cast<std::size_t>(got));
  }
  // A truncated stream ends with a short read and Z_BUF_ERROR, not -1.
  int code = Z_OK;
  const std::string message = gzerror(file, &code);
  gzclose(file);
  if (code != Z_OK) throw IoError("cannot read shard " + path.string() + ": " + message);
  session.finish_into(table);
  return table;
}

ConceptCountTable ConceptCounter::count_shards(std::span<const std::filesystem::path> shards, std::size_t jobs,
                                               std::string corpus_id) const {
  std::vector<std::optional<ConceptCountTable>> parts(shards.size());
  std::vector<std::string> failures(shards.size());
  parallel_for(shards.size(), jobs, [&](std::size_t i) {
    try {
      if (std::filesystem::is_directory(shards[i])) throw IoError(shards[i].string() + " is a directory");
      parts[i] = count_file(shards[i]);
    } catch (const IoError& e) {
      failures[i] = e.what();
    }
  });

  auto table = empty_table(std::move(corpus_id));
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (parts[i]) {
      table.merge(*parts[i]);
    } else {
      table.partial = true;
      table.failed_shards.push_back(shards[i].string());
    }
  }
  return table;
}

ConceptCountTable count_concepts(std::span<const std::filesystem::path> shards, const HierarchyGraph& graph,
                                 const CountPolicy& policy, std::size_t jobs) {
  const ConceptCounter counter(graph, policy);
  std::string id;
  for (const auto& s : shards) {
    if (!id.empty()) id += '+';
    id += s.stem().string();
  }
  return counter.count_shards(shards, jobs, id);
}

void write_counts_csv(const ConceptCountTable& table, std::ostream& out) {
  out << "synset,lemma,count\n";
  for (const auto& [s, c] : table.counts) {
    const auto it = table.lemmas.find(s);
    out << s << ',' << csv_field(it == table.lemmas.end() ? std::string() : it->second) << ',' << c << '\n';
  }
}

ConceptCountTable read_counts_csv(std::istream& in) {
  ConceptCountTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "synset") continue;
    if (fields.size() != 3) {
      throw ValidationError("counts line " + std::to_string(line_no) + ": expected synset,lemma,count");
    }
    const auto s = SynsetId::parse(fields[0]);
    std::uint64_t count = 0;
    const auto& f = fields[2];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), count);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      throw ValidationError("counts line " + std::to_string(line_no) + ": bad count '" + f + "'");
    }
    if (!table.counts.emplace(s, count).second) {
      throw ValidationError("counts line " + std::to_string(line_no) + ": duplicate synset " + s.str());
    }
    table.lemmas.emplace(s, fields[1]);
  }
  if (in.bad()) throw IoError("read error in counts file");
  return table;
}

ConceptCountTable load_counts_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto table = read_counts_csv(in);
  table.corpus_id = path.stem().string();
  return table;
}

void write_counts_summary(const ConceptCountTable& table, std::ostream& out) {
  std::uint64_t matched = 0;
  std::uint64_t total = 0;
  for (const auto& [s, c] : table.counts) {
    total += c;
    if (c > 0) ++matched;
  }
  nlohmann::ordered_json j;
  j["corpus_id"] = table.corpus_id;
  j["policy"] = table.policy;
  j["n_captions"] = table.n_captions;
  j["n_bytes"] = table.n_bytes;
  j["n_synsets"] = table.counts.size();
  j["n_synsets_matched"] = matched;
  j["total_count"] = total;
  j["partial"] = table.partial;
  j["failed_shards"] = table.failed_shards;
  out << j.dump(2) << '\n';
}

Correlation frequency_correlation(const ConceptCountTable& counts, const MetricReport& report, MetricKind metric,
                                  SpearmanMethod method) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& m : report.synsets) {
    const auto it = counts.counts.find(m.synset);
    if (it == counts.counts.end()) continue;
    if (metric == MetricKind::scs && !m.scs) continue;
    x.push_back(static_cast<double>(it->second));
    y.push_back(metric == MetricKind::isp ? m.isp : *m.scs);
  }
  if (x.size() < 3) {
    throw ValidationError("counts and report share " + std::to_string(x.size()) + " synsets; need at least 3");
  }
  return spearman(x, y, method);
}

}  // namespace hypereval
