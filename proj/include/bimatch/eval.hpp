#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bimatch/embeddings.hpp"
#include "bimatch/model.hpp"

namespace bimatch {

struct Neighbor {
  Index target;
  double cosine;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Top-n targets by cos(t, omega s) for each query source column, best first,
// equal cosines ordered by lower target index.
std::vector<std::vector<Neighbor>> nearest_targets(const ModelParams& params,
                                                   const Eigen::MatrixXd& source,
                                                   const Eigen::MatrixXd& target,
                                                   std::span<const Index> queries, Index n,
                                                   int threads = 1);

Index translate_top1(const ModelParams& params, const Eigen::MatrixXd& source,
                     const Eigen::MatrixXd& target, Index source_index);

// Gold translations keyed by source word.
struct EvalDictionary {
  std::map<std::string, std::set<std::string>> entries;

  std::size_t size() const noexcept { return entries.size(); }
};

// One "src<TAB>trg" pair per line; a source may occur on several lines.
EvalDictionary load_eval_dictionary(const std::filesystem::path& path);

struct PrecisionResult {
  double precision = 0.0;
  double coverage = 0.0;
  std::size_t evaluated = 0;  // entries whose source word is in vocabulary
  std::size_t correct = 0;
  std::size_t total = 0;
};

// Throws Error if no source word of the dictionary is in vocabulary.
PrecisionResult precision_at_1(const ModelParams& params, const EmbeddingSet& source,
                               const EmbeddingSet& target, const EvalDictionary& gold,
                               int threads = 1);

struct SimilarityTriple {
  std::string source_word;
  std::string target_word;
  double score;
};

std::vector<SimilarityTriple> load_word_similarity(const std::filesystem::path& path);

struct SimilarityResult {
  double spearman = 0.0;
  double coverage = 0.0;
  std::size_t used = 0;
};

// Spearman correlation, tied ranks averaged. Throws Error for fewer than
// two values or a constant input.
double spearman(std::span<const double> x, std::span<const double> y);

// Throws Error if fewer than two triples have both words in vocabulary.
SimilarityResult word_similarity(const ModelParams& params, const EmbeddingSet& source,
                                 const EmbeddingSet& target,
                                 std::span<const SimilarityTriple> triples);

struct HubnessEntry {
  Index target;
  std::size_t count;
};

struct HubnessReport {
  Index k = 0;
  std::size_t query_count = 0;
  std::vector<std::size_t> counts;    // N_k(y) per target index
  std::vector<HubnessEntry> ranking;  // every target, count descending, index ascending

  std::size_t max_count() const;
  std::size_t total() const;
};

// N_k(y) = number of queries having y among their k nearest targets.
HubnessReport hubness(const ModelParams& params, const Eigen::MatrixXd& source,
                      const Eigen::MatrixXd& target, std::span<const Index> queries, Index k,
                      int threads = 1);

}  // namespace bimatch
