#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bimatch/error.hpp"
#include "bimatch/model.hpp"

namespace bimatch {

struct CandidateEdge {
  Index target;
  double weight;

  friend bool operator==(const CandidateEdge&, const CandidateEdge&) = default;
};

// Sparse bipartite graph stored per source word. Missing edges stand for
// weight -infinity. Indices refer to positions in the (possibly
// rank-restricted) lexicons, which are prefixes of the full ones.
class CandidateGraph {
 public:
  CandidateGraph() = default;
  // Throws Error on out-of-range targets, non-finite weights, or a target
  // listed twice for the same source.
  CandidateGraph(Index n_src, Index n_trg, std::vector<std::vector<CandidateEdge>> by_source);

  // weights(i, j) is w_ij for target i, source j; every entry becomes an edge.
  static CandidateGraph from_dense(const Eigen::MatrixXd& weights);

  Index source_count() const noexcept { return n_src_; }
  Index target_count() const noexcept { return n_trg_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const CandidateEdge> edges_of(Index source) const;
  std::size_t max_degree() const;

 private:
  Index n_src_ = 0;
  Index n_trg_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<CandidateEdge> edges_;
};

// Prefix restriction of both lexicons (the rank constraint).
struct RankRestriction {
  Index source_top;
  Index target_top;
};

// w = -1/2 (||t - omega s||^2 - ||t - mu||^2)
double edge_weight(const Eigen::Ref<const Eigen::VectorXd>& t,
                   const Eigen::Ref<const Eigen::VectorXd>& s,
                   const ModelParams& params);

struct CandidateOptions {
  Index k = 3;
  std::optional<RankRestriction> restrict;
  // Drop edges with negative weight after top-k selection.
  bool prune_negative = true;
  int threads = 1;
};

// For every source column (within the restriction) keeps the k targets of
// highest weight, ties to the lower target index, then prunes negative
// edges. Exact: every weight is evaluated by blocked matrix products.
CandidateGraph build_candidates(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                                const ModelParams& params, const CandidateOptions& options);

struct BestSource {
  Index source;  // lowest index among equal maxima
  double weight;
};

// For every target column (within the restriction), the source maximizing
// edge_weight over all (restricted) sources.
std::vector<BestSource> best_source_per_target(const Eigen::MatrixXd& source,
                                               const Eigen::MatrixXd& target,
                                               const ModelParams& params,
                                               std::optional<RankRestriction> restrict,
                                               int threads = 1);

}  // namespace bimatch
