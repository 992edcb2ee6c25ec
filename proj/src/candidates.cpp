#include "bimatch/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blocked.hpp"

namespace bimatch {

CandidateGraph::CandidateGraph(Index n_src, Index n_trg, std::vector<std::vector<CandidateEdge>> by_source)
    : n_src_(n_src), n_trg_(n_trg) {
  if (n_src < 0 || n_trg < 0) throw Error("negative vertex count");
  if (static_cast<Index>(by_source.size()) != n_src)
    throw Error("expected edge lists for " + std::to_string(n_src) + " sources, got " + std::to_string(by_source.size()));
  offsets_.reserve(by_source.size() + 1);
  std::vector<Index> seen_by(static_cast<std::size_t>(n_trg), -1);
  for (Index j = 0; j < n_src; ++j) {
    for (const auto& e : by_source[static_cast<std::size_t>(j)]) {
      if (e.target < 0 || e.target >= n_trg)
        throw Error("edge target " + std::to_string(e.target) + " out of range for source " + std::to_string(j));
      if (!std::isfinite(e.weight))
        throw Error("non-finite weight on edge (" + std::to_string(e.target) + ", " + std::to_string(j) + ")");
      auto& mark = seen_by[static_cast<std::size_t>(e.target)];
      if (mark == j)
        throw Error("duplicate edge (" + std::to_string(e.target) + ", " + std::to_string(j) + ")");
      mark = j;
      edges_.push_back(e);
    }
    offsets_.push_back(edges_.size());
  }
}

CandidateGraph CandidateGraph::from_dense(const Eigen::MatrixXd& weights) {
  std::vector<std::vector<CandidateEdge>> lists(static_cast<std::size_t>(weights.cols()));
  for (Index j = 0; j < weights.cols(); ++j) {
    auto& list = lists[static_cast<std::size_t>(j)];
    list.reserve(static_cast<std::size_t>(weights.rows()));
    for (Index i = 0; i < weights.rows(); ++i) list.push_back({i, weights(i, j)});
  }
  return CandidateGraph(weights.cols(), weights.rows(), std::move(lists));
}

std::span<const CandidateEdge> CandidateGraph::edges_of(Index source) const {
  if (source < 0 || source >= n_src_) throw Error("source index out of range");
  const auto begin = offsets_[static_cast<std::size_t>(source)];
  const auto end = offsets_[static_cast<std::size_t>(source) + 1];
  return {edges_.data() + begin, end - begin};
}

std::size_t CandidateGraph::max_degree() const {
  std::size_t best = 0;
  for (std::size_t j = 0; j + 1 < offsets_.size(); ++j) best = std::max(best, offsets_[j + 1] - offsets_[j]);
  return best;
}

double edge_weight(const Eigen::Ref<const Eigen::VectorXd>& t, const Eigen::Ref<const Eigen::VectorXd>& s,
                   const ModelParams& params) {
  if (t.size() != params.omega.rows() || s.size() != params.omega.cols() || t.size() != params.mu.size())
    throw Error("edge_weight: dimension mismatch");
  return -0.5 * ((t - params.omega * s).squaredNorm() - (t - params.mu).squaredNorm());
}

namespace {

struct Extent {
  Index n_src;
  Index n_trg;
};

Extent resolve_extent(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const ModelParams& params,
                      const std::optional<RankRestriction>& restrict) {
  params.validate_shape();
  if (source.rows() != params.dim() || target.rows() != params.dim())
    throw Error("embedding dimension does not match model dimension");
  Extent e{source.cols(), target.cols()};
  if (restrict) {
    if (restrict->source_top < 1 || restrict->target_top < 1) throw Error("rank restriction must be positive");
    if (restrict->source_top > e.n_src || restrict->target_top > e.n_trg)
      throw Error("rank restriction (" + std::to_string(restrict->source_top) + ", " +
                  std::to_string(restrict->target_top) + ") exceeds vocabulary (" + std::to_string(e.n_src) +
                  ", " + std::to_string(e.n_trg) + ")");
    e = {restrict->source_top, restrict->target_top};
  }
  return e;
}

// Terms of the expanded weight
//   w_ij = -1/2 (|t_i|^2 - 2 t_i.(omega s_j) + |s_j|^2 - |t_i - mu|^2)
// using |omega s_j| = |s_j| for orthogonal omega.
struct WeightTerms {
  Eigen::MatrixXd mapped;        // omega * S
  Eigen::VectorXd source_sq;     // |s_j|^2
  Eigen::VectorXd target_sq;     // |t_i|^2
  Eigen::VectorXd target_mu_sq;  // |t_i - mu|^2

  double weight(Index i, Index j, double dot) const {
    return -0.5 * (target_sq[i] - 2.0 * dot + source_sq[j] - target_mu_sq[i]);
  }
};

WeightTerms make_terms(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const ModelParams& params,
                       Extent e) {
  WeightTerms w;
  const auto s = source.leftCols(e.n_src);
  const auto t = target.leftCols(e.n_trg);
  w.mapped.noalias() = params.omega * s;
  w.source_sq = s.colwise().squaredNorm().transpose();
  w.target_sq = t.colwise().squaredNorm().transpose();
  w.target_mu_sq = (t.colwise() - params.mu).colwise().squaredNorm().transpose();
  return w;
}

}  // namespace

CandidateGraph build_candidates(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                                const ModelParams& params, const CandidateOptions& options) {
  if (options.k < 1) throw Error("k must be at least 1, got " + std::to_string(options.k));
  const Extent e = resolve_extent(source, target, params, options.restrict);
  const Index k = std::min(options.k, std::max<Index>(e.n_trg, 1));
  const WeightTerms terms = make_terms(source, target, params, e);

  detail::TopKTable table(e.n_src, k);
  detail::for_each_block(terms.mapped, target.leftCols(e.n_trg), options.threads,
                         [&](Index q0, Index q1, Index c0, Index c1, const Eigen::MatrixXd& g) {
                           for (Index j = q0; j < q1; ++j) {
                             auto slot = table.slot(j);
                             const auto col = g.col(j - q0);
                             for (Index i = c0; i < c1; ++i) slot.offer(terms.weight(i, j, col[i - c0]), i);
                           }
                         });

  std::vector<std::vector<CandidateEdge>> lists(static_cast<std::size_t>(e.n_src));
  for (Index j = 0; j < e.n_src; ++j) {
    auto& list = lists[static_cast<std::size_t>(j)];
    for (const auto& s : table.row(j)) {
      if (options.prune_negative && s.score < 0.0) continue;
      list.push_back({s.index, s.score});
    }
  }
  return CandidateGraph(e.n_src, e.n_trg, std::move(lists));
}

std::vector<BestSource> best_source_per_target(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                                               const ModelParams& params, std::optional<RankRestriction> restrict,
                                               int threads) {
  const Extent e = resolve_extent(source, target, params, restrict);
  const WeightTerms terms = make_terms(source, target, params, e);
  std::vector<BestSource> best(static_cast<std::size_t>(e.n_trg), BestSource{-1, 0.0});
  if (e.n_src == 0) return best;
  detail::for_each_block(target.leftCols(e.n_trg), terms.mapped, threads,
                         [&](Index q0, Index q1, Index c0, Index c1, const Eigen::MatrixXd& g) {
                           for (Index i = q0; i < q1; ++i) {
                             auto& b = best[static_cast<std::size_t>(i)];
                             const auto col = g.col(i - q0);
                             for (Index j = c0; j < c1; ++j) {
                               const double w = terms.weight(i, j, col[j - c0]);
                               if (b.source < 0 || w > b.weight) b = {j, w};
                             }
                           }
                         });
  return best;
}

}  // namespace bimatch
