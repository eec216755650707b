#include "hypereval/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "hypereval/error.hpp"
#include "hypereval/numeric.hpp"

namespace hypereval {
namespace {

double norm(const std::vector<double>& v) {
  CompensatedSum sq;
  for (const double x : v) sq.add(x * x);
  return std::sqrt(sq.value());
}

}  // namespace

void EmbeddingTable::add(SynsetId synset, std::vector<double> vector) {
  if (vector.empty()) throw ValidationError("empty embedding for " + synset.str());
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_) {
    throw ValidationError("embedding for " + synset.str() + " has dimension " +
                          std::to_string(vector.size()) + ", expected " + std::to_string(dimension_));
  }
  for (const double x : vector) {
    if (!std::isfinite(x)) throw ValidationError("non-finite embedding entry for " + synset.str());
  }
  if (norm(vector) == 0.0) throw ValidationError("zero-norm embedding for " + synset.str());
  if (!vectors_.emplace(synset, std::move(vector)).second) {
    throw ValidationError("duplicate embedding for " + synset.str());
  }
}

const std::vector<double>* EmbeddingTable::find(SynsetId synset) const {
  const auto it = vectors_.find(synset);
  return it == vectors_.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(std::istream& in) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + e.what());
    }
    if (!obj.is_object() || !obj.contains("synset") || !obj.contains("vector") ||
        !obj["synset"].is_string() || !obj["vector"].is_array()) {
      throw ValidationError(where + "expected {\"synset\": ..., \"vector\": [...]}");
    }
    const auto id = obj["synset"].get<std::string>();
    if (!SynsetId::valid(id)) throw ValidationError(where + "malformed synset id '" + id + "'");
    std::vector<double> v;
    v.reserve(obj["vector"].size());
    for (const auto& x : obj["vector"]) {
      if (!x.is_number()) throw ValidationError(where + "non-numeric vector entry");
      v.push_back(x.get<double>());
    }
    try {
      table.add(SynsetId::parse(id), std::move(v));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings " + path.string());
  return load_embeddings(in);
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  for (const auto& [synset, v] : table.entries()) {
    nlohmann::ordered_json row;
    row["synset"] = synset.str();
    row["vector"] = v;
    out << row.dump() << '\n';
  }
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("cosine similarity of vectors with different dimensions");
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine similarity of a zero-norm vector");
  CompensatedSum dot;
  for (std::size_t i = 0; i < a.size(); ++i) dot.add((a[i] / na) * (b[i] / nb));
  return dot.value();
}

}  // namespace hypereval
