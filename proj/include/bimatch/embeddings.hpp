#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "bimatch/error.hpp"

namespace bimatch {

// Ordered word list. Position i is the i-th most frequent word; word
// lookup is exact and case-sensitive.
class Lexicon {
 public:
  Lexicon() = default;
  // Throws Error if a word occurs twice.
  explicit Lexicon(std::vector<std::string> words);

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  const std::string& word(Index i) const { return words_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::optional<Index> find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }

  // First n words (all of them if n >= size()).
  Lexicon prefix(std::size_t n) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Index> index_;
};

// d x n, column i is the vector of word i in the paired lexicon.
using EmbeddingMatrix = Eigen::MatrixXd;

struct EmbeddingSet {
  Lexicon lexicon;
  EmbeddingMatrix vectors;

  Index dim() const { return vectors.rows(); }
  Index size() const { return vectors.cols(); }
  // Keeps the first n words.
  EmbeddingSet prefix(std::size_t n) const;
};

enum class NormalizationScheme { none, unit, unit_center_unit };

std::string_view to_string(NormalizationScheme scheme);
NormalizationScheme parse_normalization(std::string_view text);

enum class ZeroNormPolicy { error, drop };

// Reads word2vec text format: a header "n d" followed by n rows of
// "word v1 ... vd". Only the first max_vocab rows are read when given.
EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             std::optional<std::size_t> max_vocab = std::nullopt);

// Writes word2vec text format using shortest round-trip decimal values.
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);

// Matrix-level normalization; zero-norm columns are reported by index.
EmbeddingMatrix normalize(const EmbeddingMatrix& m, NormalizationScheme scheme);

// Same, but zero-norm columns are reported by word or dropped (together with
// their lexicon entry) depending on policy.
EmbeddingSet normalize(const EmbeddingSet& set, NormalizationScheme scheme,
                       ZeroNormPolicy policy = ZeroNormPolicy::error);

}  // namespace bimatch
