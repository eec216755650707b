#include "hypereval/predictions.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "hypereval/error.hpp"
#include "hypereval/numeric.hpp"
#include "hypereval/parallel.hpp"

namespace hypereval {
namespace {

constexpr std::array<char, 4> kMagic = {'H', 'L', 'P', 'R'};
constexpr std::uint16_t kBinaryVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 4 + 8;

template <typename T>
void put_le(std::string& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | p[i]);
  return static_cast<T>(u);
}

void put_float_le(std::string& buf, float value) { put_le(buf, std::bit_cast<std::uint32_t>(value)); }

float get_float_le(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }

struct JsonRecord {
  std::size_t line = 0;
  bool header = false;
  std::optional<std::string> synset;
  std::optional<std::uint64_t> sample;
  std::optional<std::string> kind;
  std::optional<std::string> model_id;
  std::optional<std::int64_t> seed;
  std::vector<float> values;
  bool saw_values = false;
  bool non_finite = false;
};

// Reads one prediction object. Numbers inside "values" are converted from
// their raw lexeme straight to float so JSONL and binary dumps agree bitwise.
class RecordSax : public nlohmann::json_sax<nlohmann::json> {
 public:
  explicit RecordSax(JsonRecord& rec) : rec_(rec) {}

  bool null() override { return scalar(); }
  bool boolean(bool) override { return scalar(); }
  bool number_integer(number_integer_t v) override {
    if (in_values()) return push(static_cast<float>(v));
    if (depth_ == 1 && key_ == "seed") rec_.seed = v;
    if (depth_ == 1 && key_ == "sample") {
      if (v < 0) return fail("negative sample index");
      rec_.sample = static_cast<std::uint64_t>(v);
    }
    return true;
  }
  bool number_unsigned(number_unsigned_t v) override {
    if (in_values()) return push(static_cast<float>(v));
    if (depth_ == 1 && key_ == "seed") rec_.seed = static_cast<std::int64_t>(v);
    if (depth_ == 1 && key_ == "sample") rec_.sample = v;
    return true;
  }
  bool number_float(number_float_t v, const string_t& raw) override {
    if (in_values()) {
      float f = 0.0F;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), f);
      if (ec != std::errc{} || !std::isfinite(f)) {
        rec_.non_finite = true;
        f = std::numeric_limits<float>::quiet_NaN();
      }
      (void)ptr;
      return push(f);
    }
    if (depth_ == 1 && key_ == "sample") return fail("sample index must be an integer");
    if (depth_ == 1 && key_ == "seed") rec_.seed = static_cast<std::int64_t>(v);
    return true;
  }
  bool string(string_t& s) override {
    if (in_values()) return fail("non-numeric entry in values");
    if (depth_ == 1) {
      if (key_ == "synset") rec_.synset = s;
      if (key_ == "kind") rec_.kind = s;
      if (key_ == "model_id") rec_.model_id = s;
    }
    return true;
  }
  bool binary(binary_t&) override { return scalar(); }
  bool start_object(std::size_t) override {
    ++depth_;
    return depth_ == 1 || !in_values() || fail("nested object in values");
  }
  bool end_object() override {
    --depth_;
    return true;
  }
  bool start_array(std::size_t) override {
    ++array_depth_;
    if (depth_ == 1 && key_ == "values" && array_depth_ == 1) {
      rec_.saw_values = true;
      rec_.values.reserve(1024);
      return true;
    }
    return !in_values() || fail("nested array in values");
  }
  bool end_array() override {
    --array_depth_;
    return true;
  }
  bool key(string_t& k) override {
    if (depth_ == 1) key_ = k;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    error = ex.what();
    return false;
  }

  std::string error;

 private:
  bool in_values() const { return depth_ == 1 && key_ == "values" && array_depth_ == 1; }
  bool scalar() { return !in_values() || fail("non-numeric entry in values"); }
  bool push(float f) {
    rec_.values.push_back(f);
    return true;
  }
  bool fail(std::string msg) {
    error = std::move(msg);
    return false;
  }

  JsonRecord& rec_;
  int depth_ = 0;
  int array_depth_ = 0;
  std::string key_;
};

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

JsonRecord parse_record(std::string_view text, std::size_t line) {
  JsonRecord rec;
  rec.line = line;
  RecordSax sax(rec);
  const bool ok = nlohmann::json::sax_parse(text.begin(), text.end(), &sax);
  if (!ok) {
    throw ValidationError(line_prefix(line) + (sax.error.empty() ? "malformed JSON" : sax.error));
  }
  rec.header = !rec.synset.has_value();
  return rec;
}

void append_float(std::string& out, float f) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), f);
  (void)ec;
  out.append(buf.data(), ptr);
}

template <typename T>
std::vector<double> full_distribution_impl(std::span<const T> row, OutputKind kind) {
  std::vector<double> out(row.size());
  if (kind == OutputKind::probabilities) {
    std::transform(row.begin(), row.end(), out.begin(), [](T v) { return static_cast<double>(v); });
    return out;
  }
  double max = -std::numeric_limits<double>::infinity();
  for (const T v : row) max = std::max(max, static_cast<double>(v));
  CompensatedSum total;
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = std::exp(static_cast<double>(row[i]) - max);
    total.add(out[i]);
  }
  const double z = total.value();
  for (auto& v : out) v /= z;
  return out;
}

template <typename T>
std::vector<double> hyponym_distribution_impl(std::span<const T> row, OutputKind kind,
                                              const ClassifiableSubtree& subtree,
                                              std::size_t* degenerate_rows) {
  const auto& idx = subtree.leaf_indices;
  if (idx.empty()) throw ValidationError("empty classifiable subtree for " + subtree.synset.str());
  std::vector<double> out(idx.size());
  CompensatedSum total;
  if (kind == OutputKind::logits) {
    double max = -std::numeric_limits<double>::infinity();
    for (const auto c : idx) max = std::max(max, static_cast<double>(row[c]));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out[i] = std::exp(static_cast<double>(row[idx[i]]) - max);
      total.add(out[i]);
    }
  } else {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out[i] = static_cast<double>(row[idx[i]]);
      total.add(out[i]);
    }
    if (total.value() <= 0.0) {
      if (degenerate_rows != nullptr) ++*degenerate_rows;
      std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(idx.size()));
      return out;
    }
  }
  const double z = total.value();
  for (auto& v : out) v /= z;
  return out;
}

template <typename T>
double subtree_mass_impl(std::span<const T> row, OutputKind kind, const ClassifiableSubtree& subtree) {
  CompensatedSum inside;
  if (kind == OutputKind::probabilities) {
    for (const auto c : subtree.leaf_indices) inside.add(static_cast<double>(row[c]));
    return inside.value();
  }
  double max = -std::numeric_limits<double>::infinity();
  for (const T v : row) max = std::max(max, static_cast<double>(v));
  CompensatedSum total;
  auto next_inside = subtree.leaf_indices.begin();
  for (std::size_t c = 0; c < row.size(); ++c) {
    const double e = std::exp(static_cast<double>(row[c]) - max);
    total.add(e);
    if (next_inside != subtree.leaf_indices.end() && *next_inside == c) {
      inside.add(e);
      ++next_inside;
    }
  }
  return inside.value() / total.value();
}

}  // namespace

std::string_view to_string(OutputKind kind) noexcept {
  return kind == OutputKind::logits ? "logits" : "probabilities";
}

OutputKind parse_output_kind(std::string_view text) {
  if (text == "logits") return OutputKind::logits;
  if (text == "probabilities" || text == "probs") return OutputKind::probabilities;
  throw ValidationError("unknown prediction kind '" + std::string(text) + "'");
}

const SynsetPredictions* PredictionSet::find(SynsetId s) const {
  const auto it = synsets.find(s);
  return it == synsets.end() ? nullptr : &it->second;
}

std::size_t PredictionSet::total_rows() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, p] : synsets) n += p.rows();
  return n;
}

std::optional<std::size_t> PredictionSet::uniform_rows() const noexcept {
  std::optional<std::size_t> rows;
  for (const auto& [_, p] : synsets) {
    if (rows && *rows != p.rows()) return std::nullopt;
    rows = p.rows();
  }
  return rows;
}

PredictionSetBuilder::PredictionSetBuilder(OutputKind kind, std::size_t n_classes)
    : kind_(kind), n_classes_(n_classes) {
  if (n_classes == 0) throw ValidationError("prediction rows must have at least one class");
}

void PredictionSetBuilder::add(SynsetId synset, std::uint32_t sample, std::span<const float> values,
                               std::string_view where) {
  const std::string prefix(where);
  if (values.size() != n_classes_) {
    throw ValidationError(prefix + "row for " + synset.str() + " sample " + std::to_string(sample) +
                          " has " + std::to_string(values.size()) + " values, expected " +
                          std::to_string(n_classes_));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError(prefix + "non-finite value at class " + std::to_string(i) + " of " +
                            synset.str() + " sample " + std::to_string(sample));
    }
  }
  if (kind_ == OutputKind::probabilities) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0.0F) {
        throw ValidationError(prefix + "negative probability at class " + std::to_string(i) + " of " +
                              synset.str() + " sample " + std::to_string(sample));
      }
      sum.add(values[i]);
    }
    if (std::fabs(sum.value() - 1.0) > kProbabilitySumTolerance) {
      std::ostringstream msg;
      msg.precision(10);
      msg << prefix << "probability row for " << synset << " sample " << sample << " sums to "
          << sum.value();
      throw ValidationError(msg.str());
    }
  }
  auto& p = pending_[synset];
  p.samples.push_back(sample);
  p.values.insert(p.values.end(), values.begin(), values.end());
}

PredictionSet PredictionSetBuilder::finish(std::string model_id, std::int64_t seed, bool allow_ragged) && {
  PredictionSet set;
  set.model_id = std::move(model_id);
  set.seed = seed;
  set.kind = kind_;
  set.n_classes = n_classes_;
  std::optional<std::size_t> rows;
  for (auto& [synset, pending] : pending_) {
    std::vector<std::size_t> order(pending.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return pending.samples[a] < pending.samples[b]; });
    SynsetPredictions out;
    out.sample_indices.reserve(order.size());
    const bool sorted = std::is_sorted(pending.samples.begin(), pending.samples.end());
    if (!sorted) out.values.reserve(pending.values.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto sample = pending.samples[order[k]];
      if (k > 0 && out.sample_indices.back() == sample) {
        throw ValidationError("duplicate (synset, sample) pair (" + synset.str() + ", " +
                              std::to_string(sample) + ")");
      }
      out.sample_indices.push_back(sample);
      if (!sorted) {
        const auto begin = pending.values.begin() + static_cast<std::ptrdiff_t>(order[k] * n_classes_);
        out.values.insert(out.values.end(), begin, begin + static_cast<std::ptrdiff_t>(n_classes_));
      }
    }
    if (sorted) out.values = std::move(pending.values);
    if (!allow_ragged && rows && *rows != out.rows()) {
      throw ValidationError("synset " + synset.str() + " has " + std::to_string(out.rows()) +
                            " samples but earlier synsets have " + std::to_string(*rows) +
                            " (ragged input not allowed)");
    }
    rows = out.rows();
    set.synsets.emplace(synset, std::move(out));
  }
  pending_.clear();
  return set;
}

PredictionFormat detect_prediction_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  return (in.gcount() == 4 && magic == kMagic) ? PredictionFormat::binary : PredictionFormat::jsonl;
}

PredictionSet load_predictions_jsonl(std::istream& in, const PredictionLoadOptions& options) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("read error while loading predictions");

  struct Line {
    std::size_t number;
    std::string_view content;
  };
  std::vector<Line> lines;
  {
    std::string_view rest(text);
    std::size_t number = 0;
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      auto line = rest.substr(0, nl);
      rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
      ++number;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      lines.push_back({number, line});
    }
  }

  std::vector<JsonRecord> records(lines.size());
  parallel_for(lines.size(), options.jobs,
               [&](std::size_t i) { records[i] = parse_record(lines[i].content, lines[i].number); });

  std::string model_id = options.model_id.value_or("");
  std::int64_t seed = 0;
  std::optional<OutputKind> kind;
  std::size_t first = 0;
  if (!records.empty() && records.front().header) {
    const auto& h = records.front();
    if (h.model_id && !options.model_id) model_id = *h.model_id;
    if (h.seed) seed = *h.seed;
    if (h.kind) kind = parse_output_kind(*h.kind);
    first = 1;
  }

  std::optional<PredictionSetBuilder> builder;
  for (std::size_t i = first; i < records.size(); ++i) {
    auto& rec = records[i];
    const auto where = line_prefix(rec.line);
    if (rec.header) throw ValidationError(where + "record without \"synset\"");
    if (!rec.sample) throw ValidationError(where + "record without \"sample\"");
    if (!rec.saw_values) throw ValidationError(where + "record without \"values\"");
    if (*rec.sample > std::numeric_limits<std::uint32_t>::max()) {
      throw ValidationError(where + "sample index out of range");
    }
    if (!SynsetId::valid(*rec.synset)) {
      throw ValidationError(where + "malformed synset id '" + *rec.synset + "'");
    }
    if (rec.non_finite) throw ValidationError(where + "non-finite value in values");
    const OutputKind row_kind = rec.kind ? parse_output_kind(*rec.kind) : kind.value_or(OutputKind::logits);
    if (!kind) kind = row_kind;
    if (row_kind != *kind) {
      throw ValidationError(where + "kind '" + std::string(to_string(row_kind)) +
                            "' differs from earlier rows ('" + std::string(to_string(*kind)) + "')");
    }
    if (!builder) builder.emplace(*kind, options.n_classes.value_or(rec.values.size()));
    builder->add(SynsetId::parse(*rec.synset), static_cast<std::uint32_t>(*rec.sample), rec.values, where);
    rec.values = {};
  }
  if (!builder) throw ValidationError("prediction file contains no records");
  return std::move(*builder).finish(model_id, seed, options.allow_ragged);
}

PredictionSet load_predictions_binary(std::istream& in, const PredictionLoadOptions& options) {
  std::array<unsigned char, kHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw ValidationError("truncated binary prediction header");
  }
  if (std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
    throw ValidationError("bad magic in binary prediction file");
  }
  const auto version = get_le<std::uint16_t>(header.data() + 4);
  if (version != kBinaryVersion) {
    throw ValidationError("unsupported binary prediction version " + std::to_string(version));
  }
  const auto kind_byte = header[6];
  if (kind_byte > 1) throw ValidationError("unknown kind byte " + std::to_string(kind_byte));
  const auto kind = static_cast<OutputKind>(kind_byte);
  const std::size_t n_classes = get_le<std::uint32_t>(header.data() + 7);
  const auto n_records = get_le<std::uint64_t>(header.data() + 11);
  if (options.n_classes && *options.n_classes != n_classes) {
    throw ValidationError("binary file has " + std::to_string(n_classes) + " classes, expected " +
                          std::to_string(*options.n_classes));
  }

  const std::size_t record_bytes = 8 + 4 + 4 * n_classes;
  PredictionSetBuilder builder(kind, n_classes);
  constexpr std::size_t kBatch = 256;
  std::vector<unsigned char> buf(record_bytes * kBatch);
  std::vector<float> values(n_classes);
  std::uint64_t done = 0;
  while (done < n_records) {
    const auto batch = static_cast<std::size_t>(std::min<std::uint64_t>(kBatch, n_records - done));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(batch * record_bytes));
    if (in.gcount() != static_cast<std::streamsize>(batch * record_bytes)) {
      throw ValidationError("truncated binary prediction file: expected " + std::to_string(n_records) +
                            " records");
    }
    for (std::size_t r = 0; r < batch; ++r) {
      const unsigned char* rec = buf.data() + r * record_bytes;
      const auto offset = get_le<std::uint64_t>(rec);
      const auto sample = get_le<std::uint32_t>(rec + 8);
      if (offset > SynsetId::kMaxOffset) {
        throw ValidationError("record " + std::to_string(done + r) + ": synset offset out of range");
      }
      if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), rec + 12, 4 * n_classes);
      } else {
        for (std::size_t c = 0; c < n_classes; ++c) values[c] = get_float_le(rec + 12 + 4 * c);
      }
      builder.add(SynsetId(static_cast<std::uint32_t>(offset)), sample, values,
                  "record " + std::to_string(done + r) + ": ");
    }
    done += batch;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after " + std::to_string(n_records) + " records");
  }
  return std::move(builder).finish(options.model_id.value_or(""), 0, options.allow_ragged);
}

PredictionSet load_predictions(const std::filesystem::path& path, const PredictionLoadOptions& options) {
  const auto format = detect_prediction_format(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions " + path.string());
  PredictionLoadOptions opts = options;
  PredictionSet set = format == PredictionFormat::binary ? load_predictions_binary(in, opts)
                                                         : load_predictions_jsonl(in, opts);
  if (set.model_id.empty()) set.model_id = path.stem().string();
  return set;
}

void write_predictions_jsonl(const PredictionSet& set, std::ostream& out) {
  {
    nlohmann::ordered_json header;
    header["model_id"] = set.model_id;
    header["seed"] = set.seed;
    header["kind"] = to_string(set.kind);
    header["n_classes"] = set.n_classes;
    out << header.dump() << '\n';
  }
  const std::string kind(to_string(set.kind));
  std::string line;
  for (const auto& [synset, preds] : set.synsets) {
    for (std::size_t r = 0; r < preds.rows(); ++r) {
      line.clear();
      line += "{\"synset\":\"" + synset.str() + "\",\"sample\":" + std::to_string(preds.sample_indices[r]) +
              ",\"kind\":\"" + kind + "\",\"values\":[";
      const auto row = preds.row(r, set.n_classes);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) line += ',';
        append_float(line, row[c]);
      }
      line += "]}\n";
      out << line;
    }
  }
  if (!out) throw IoError("write error while saving predictions");
}

void write_predictions_binary(const PredictionSet& set, std::ostream& out) {
  std::string buf;
  buf.append(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(buf, kBinaryVersion);
  put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(set.kind));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(set.n_classes));
  put_le<std::uint64_t>(buf, set.total_rows());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (const auto& [synset, preds] : set.synsets) {
    for (std::size_t r = 0; r < preds.rows(); ++r) {
      buf.clear();
      put_le<std::uint64_t>(buf, synset.offset());
      put_le<std::uint32_t>(buf, preds.sample_indices[r]);
      for (const float v : preds.row(r, set.n_classes)) put_float_le(buf, v);
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
  if (!out) throw IoError("write error while saving predictions");
}

void save_predictions(const PredictionSet& set, const std::filesystem::path& path, PredictionFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write predictions to " + path.string());
  if (format == PredictionFormat::binary) {
    write_predictions_binary(set, out);
  } else {
    write_predictions_jsonl(set, out);
  }
}

std::vector<double> full_distribution(std::span<const float> row, OutputKind kind) {
  return full_distribution_impl(row, kind);
}
std::vector<double> full_distribution(std::span<const double> row, OutputKind kind) {
  return full_distribution_impl(row, kind);
}

std::vector<double> hyponym_distribution(std::span<const float> row, OutputKind kind,
                                         const ClassifiableSubtree& subtree, std::size_t* degenerate_rows) {
  return hyponym_distribution_impl(row, kind, subtree, degenerate_rows);
}
std::vector<double> hyponym_distribution(std::span<const double> row, OutputKind kind,
                                         const ClassifiableSubtree& subtree, std::size_t* degenerate_rows) {
  return hyponym_distribution_impl(row, kind, subtree, degenerate_rows);
}

double subtree_mass(std::span<const float> row, OutputKind kind, const ClassifiableSubtree& subtree) {
  return subtree_mass_impl(row, kind, subtree);
}
double subtree_mass(std::span<const double> row, OutputKind kind, const ClassifiableSubtree& subtree) {
  return subtree_mass_impl(row, kind, subtree);
}

}  // namespace hypereval
