#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "hypereval/synset_id.hpp"

namespace hypereval {

/// Text-encoder embeddings keyed by synset, all of one dimension.
class EmbeddingTable {
 public:
  /// Throws ValidationError on dimension mismatch, non-finite entries,
  /// zero-norm vectors or duplicate synsets.
  void add(SynsetId synset, std::vector<double> vector);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  const std::vector<double>* find(SynsetId synset) const;
  const std::map<SynsetId, std::vector<double>>& entries() const noexcept { return vectors_; }

 private:
  std::size_t dimension_ = 0;
  std::map<SynsetId, std::vector<double>> vectors_;
};

/// JSONL, one `{"synset": "...", "vector": [...]}` object per line.
EmbeddingTable load_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingTable& table, std::ostream& out);

/// Cosine similarity; both vectors are normalized first.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hypereval
