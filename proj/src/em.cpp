#include "bimatch/em.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace bimatch {

std::string_view to_string(PriorKind prior) {
  switch (prior) {
    case PriorKind::one_to_one: return "1:1";
    case PriorKind::one_to_two: return "1:2";
    case PriorKind::two_to_two: return "2:2";
    case PriorKind::one_to_many: return "1:many";
  }
  return "unknown";
}

PriorKind parse_prior(std::string_view text) {
  if (text == "1:1" || text == "one_to_one") return PriorKind::one_to_one;
  if (text == "1:2" || text == "one_to_two") return PriorKind::one_to_two;
  if (text == "2:2" || text == "two_to_two") return PriorKind::two_to_two;
  if (text == "1:many" || text == "one_to_many") return PriorKind::one_to_many;
  throw Error("unknown prior '" + std::string(text) + "' (expected 1:1, 1:2, 2:2 or 1:many)");
}

void EmConfig::validate() const {
  if (k < 1) throw Error("k must be at least 1");
  if (rank_restrict && (rank_restrict->source_top < 1 || rank_restrict->target_top < 1))
    throw Error("rank restriction must be positive");
  if (!(convergence_eps >= 0.0)) throw Error("convergence threshold must be non-negative");
  if (max_iters < 0) throw Error("max_iters must be non-negative");
  if (min_iters < 0) throw Error("min_iters must be non-negative");
  if (threads < 1) throw Error("threads must be at least 1");
}

std::size_t Alignment::aligned_count() const {
  return static_cast<std::size_t>(std::count_if(source_of.begin(), source_of.end(), [](Index s) { return s != kUnaligned; }));
}

Matching Alignment::to_pairs() const {
  Matching m;
  for (std::size_t i = 0; i < source_of.size(); ++i) {
    if (source_of[i] == kUnaligned) continue;
    m.pairs.push_back({static_cast<Index>(i), source_of[i], weight[i]});
  }
  std::sort(m.pairs.begin(), m.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  for (const auto& p : m.pairs) m.total_weight += p.weight;
  return m;
}

Eigen::MatrixXd procrustes(const Eigen::Ref<const Eigen::MatrixXd>& source_matched,
                           const Eigen::Ref<const Eigen::MatrixXd>& target_matched) {
  if (source_matched.rows() != target_matched.rows() || source_matched.cols() != target_matched.cols())
    throw Error("procrustes: source and target matrices must have the same shape");
  if (source_matched.cols() < 1) throw Error("procrustes: need at least one pair");
  if (!source_matched.allFinite() || !target_matched.allFinite())
    throw Error("procrustes: non-finite input");
  const Eigen::MatrixXd cross = target_matched * source_matched.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw Error("procrustes: SVD did not converge");
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::VectorXd centroid(const Eigen::MatrixXd& target, std::span<const Index> selected,
                         const Eigen::VectorXd& previous_mu) {
  if (selected.empty()) return previous_mu;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(target.rows());
  for (Index i : selected) {
    if (i < 0 || i >= target.cols()) throw Error("centroid: index " + std::to_string(i) + " out of range");
    sum += target.col(i);
  }
  return sum / static_cast<double>(selected.size());
}

VertexDuplication::VertexDuplication(PriorKind prior, Index n_src, Index n_trg)
    : prior_(prior), n_src_(n_src), n_trg_(n_trg) {
  if (prior != PriorKind::one_to_two && prior != PriorKind::two_to_two)
    throw Error("vertex duplication applies to the 1:2 and 2:2 priors only, got " + std::string(to_string(prior)));
}

CandidateGraph VertexDuplication::expand(const CandidateGraph& g) const {
  if (g.source_count() != n_src_ || g.target_count() != n_trg_) throw Error("graph size does not match duplication");
  const bool copy_targets = prior_ == PriorKind::two_to_two;
  std::vector<std::vector<CandidateEdge>> lists(static_cast<std::size_t>(2 * n_src_));
  for (Index j = 0; j < n_src_; ++j) {
    std::vector<CandidateEdge> list;
    for (const auto& e : g.edges_of(j)) {
      list.push_back(e);
      if (copy_targets) list.push_back({e.target + n_trg_, e.weight});
    }
    lists[static_cast<std::size_t>(j + n_src_)] = list;
    lists[static_cast<std::size_t>(j)] = std::move(list);
  }
  return CandidateGraph(2 * n_src_, copy_targets ? 2 * n_trg_ : n_trg_, std::move(lists));
}

Matching VertexDuplication::merge(const Matching& expanded) const {
  std::vector<MatchedPair> pairs;
  pairs.reserve(expanded.pairs.size());
  for (auto p : expanded.pairs) {
    if (p.source >= n_src_) p.source -= n_src_;
    if (p.target >= n_trg_) p.target -= n_trg_;
    pairs.push_back(p);
  }
  std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const MatchedPair& a, const MatchedPair& b) {
                            return a.source == b.source && a.target == b.target;
                          }),
              pairs.end());
  Matching m;
  for (const auto& p : pairs) m.total_weight += p.weight;
  m.pairs = std::move(pairs);
  return m;
}

namespace {

struct Extent {
  Index n_src;
  Index n_trg;
};

Extent effective_extent(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const EmConfig& config) {
  if (!config.rank_restrict) return {source.cols(), target.cols()};
  return {std::min(source.cols(), config.rank_restrict->source_top),
          std::min(target.cols(), config.rank_restrict->target_top)};
}

std::optional<RankRestriction> clamp_restriction(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                                                 const EmConfig& config) {
  if (!config.rank_restrict) return std::nullopt;
  const Extent e = effective_extent(source, target, config);
  return RankRestriction{e.n_src, e.n_trg};
}

// Pairs forced into every E-step result, reduced to a matching in seed order.
std::vector<SeedPair> pinned_pairs(const SeedDictionary& seed, Extent e) {
  std::set<Index> sources;
  std::set<Index> targets;
  std::vector<SeedPair> out;
  for (const auto& p : seed.pairs) {
    if (p.source >= e.n_src || p.target >= e.n_trg) continue;
    if (sources.count(p.source) || targets.count(p.target)) continue;
    sources.insert(p.source);
    targets.insert(p.target);
    out.push_back(p);
  }
  return out;
}

CandidateGraph without_vertices(const CandidateGraph& g, const std::vector<SeedPair>& pinned) {
  std::vector<char> drop_src(static_cast<std::size_t>(g.source_count()), 0);
  std::vector<char> drop_trg(static_cast<std::size_t>(g.target_count()), 0);
  for (const auto& p : pinned) {
    drop_src[static_cast<std::size_t>(p.source)] = 1;
    drop_trg[static_cast<std::size_t>(p.target)] = 1;
  }
  std::vector<std::vector<CandidateEdge>> lists(static_cast<std::size_t>(g.source_count()));
  for (Index j = 0; j < g.source_count(); ++j) {
    if (drop_src[static_cast<std::size_t>(j)]) continue;
    for (const auto& e : g.edges_of(j))
      if (!drop_trg[static_cast<std::size_t>(e.target)]) lists[static_cast<std::size_t>(j)].push_back(e);
  }
  return CandidateGraph(g.source_count(), g.target_count(), std::move(lists));
}

Matching with_pinned(Matching m, const std::vector<SeedPair>& pinned, const Eigen::MatrixXd& source,
                     const Eigen::MatrixXd& target, const ModelParams& params) {
  for (const auto& p : pinned) {
    const double w = edge_weight(target.col(p.target), source.col(p.source), params);
    m.pairs.push_back({p.target, p.source, w});
    m.total_weight += w;
  }
  std::sort(m.pairs.begin(), m.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  return m;
}

Matching matching_e_step(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const ModelParams& params,
                         const EmConfig& config, const std::vector<SeedPair>& pinned) {
  CandidateOptions options;
  options.k = config.k;
  options.restrict = clamp_restriction(source, target, config);
  options.threads = config.threads;
  CandidateGraph g = build_candidates(source, target, params, options);
  if (!pinned.empty()) g = without_vertices(g, pinned);

  Matching m;
  if (config.prior == PriorKind::one_to_one) {
    m = solve_sparse_lap(g);
  } else {
    VertexDuplication dup(config.prior, g.source_count(), g.target_count());
    m = dup.merge(solve_sparse_lap(dup.expand(g)));
  }
  return pinned.empty() ? m : with_pinned(std::move(m), pinned, source, target, params);
}

Alignment one_to_many_e_step(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                             const ModelParams& params, const EmConfig& config,
                             const std::vector<SeedPair>& pinned) {
  const auto best = best_source_per_target(source, target, params, clamp_restriction(source, target, config),
                                           config.threads);
  Alignment a;
  a.source_of.assign(best.size(), Alignment::kUnaligned);
  a.weight.assign(best.size(), 0.0);
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (best[i].source < 0 || best[i].weight < 0.0) continue;
    a.source_of[i] = best[i].source;
    a.weight[i] = best[i].weight;
  }
  for (const auto& p : pinned) {
    a.source_of[static_cast<std::size_t>(p.target)] = p.source;
    a.weight[static_cast<std::size_t>(p.target)] =
        edge_weight(target.col(p.target), source.col(p.source), params);
  }
  return a;
}

void check_inputs(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const ModelParams& params) {
  params.validate_shape();
  if (source.rows() != params.dim() || target.rows() != params.dim())
    throw Error("embedding dimension does not match model dimension");
}

}  // namespace

Matching e_step_matching(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const ModelParams& params,
                         const EmConfig& config) {
  config.validate();
  check_inputs(source, target, params);
  if (config.prior == PriorKind::one_to_many)
    throw Error("e_step_matching does not handle the one-to-many prior; use e_step_one_to_many");
  return matching_e_step(source, target, params, config, {});
}

Alignment e_step_one_to_many(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                             const ModelParams& params, const EmConfig& config) {
  config.validate();
  check_inputs(source, target, params);
  return one_to_many_e_step(source, target, params, config, {});
}

ModelParams m_step(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const Matching& pairs,
                   const Eigen::VectorXd& previous_mu, std::optional<Index> n_trg) {
  if (pairs.empty()) throw EmCollapse("M-step needs at least one aligned pair", 0);
  if (source.rows() != target.rows()) throw Error("source and target dimensions differ");
  const Index d = source.rows();
  const Index n = static_cast<Index>(pairs.size());
  Eigen::MatrixXd s_m(d, n);
  Eigen::MatrixXd t_m(d, n);
  for (Index c = 0; c < n; ++c) {
    const auto& p = pairs.pairs[static_cast<std::size_t>(c)];
    if (p.source < 0 || p.source >= source.cols() || p.target < 0 || p.target >= target.cols())
      throw Error("M-step pair (" + std::to_string(p.target) + ", " + std::to_string(p.source) + ") out of range");
    s_m.col(c) = source.col(p.source);
    t_m.col(c) = target.col(p.target);
  }
  ModelParams out;
  out.omega = procrustes(s_m, t_m);
  const auto unmatched = pairs.unmatched_targets(n_trg.value_or(target.cols()));
  out.mu = centroid(target, unmatched, previous_mu);
  return out;
}

ModelParams m_step(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const Alignment& alignment,
                   const Eigen::VectorXd& previous_mu) {
  return m_step(source, target, alignment.to_pairs(), previous_mu, static_cast<Index>(alignment.source_of.size()));
}

double mean_cosine(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const Matching& pairs,
                   const ModelParams& params) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs.pairs) {
    const Eigen::VectorXd mapped = params.omega * source.col(p.source);
    const auto t = target.col(p.target);
    const double denom = mapped.norm() * t.norm();
    sum += denom > 0.0 ? t.dot(mapped) / denom : 0.0;
  }
  return sum / static_cast<double>(pairs.size());
}

EmResult run_em(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const SeedDictionary& seed,
                const EmConfig& config, const IterationObserver& observer) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  if (source.rows() != target.rows()) throw Error("source and target embeddings have different dimensions");
  if (seed.pairs.empty()) throw Error("seed dictionary is empty");
  for (const auto& p : seed.pairs)
    if (p.source < 0 || p.source >= source.cols() || p.target < 0 || p.target >= target.cols())
      throw Error("seed pair (" + std::to_string(p.source) + ", " + std::to_string(p.target) + ") out of range");

  const Index d = source.rows();
  const Extent extent = effective_extent(source, target, config);
  const std::vector<SeedPair> pinned = config.pin_seed ? pinned_pairs(seed, extent) : std::vector<SeedPair>{};

  EmResult result;
  {
    Eigen::MatrixXd s_m(d, static_cast<Index>(seed.pairs.size()));
    Eigen::MatrixXd t_m(d, static_cast<Index>(seed.pairs.size()));
    for (std::size_t c = 0; c < seed.pairs.size(); ++c) {
      s_m.col(static_cast<Index>(c)) = source.col(seed.pairs[c].source);
      t_m.col(static_cast<Index>(c)) = target.col(seed.pairs[c].target);
    }
    result.params = ModelParams{procrustes(s_m, t_m), Eigen::VectorXd::Zero(d)};
  }
  for (const auto& p : seed.pairs) {
    const double w = edge_weight(target.col(p.target), source.col(p.source), result.params);
    result.matching.pairs.push_back({p.target, p.source, w});
    result.matching.total_weight += w;
  }

  double previous = -std::numeric_limits<double>::infinity();
  for (int iteration = 1; iteration <= config.max_iters; ++iteration) {
    const auto e_start = Clock::now();
    Matching m = config.prior == PriorKind::one_to_many
                     ? one_to_many_e_step(source, target, result.params, config, pinned).to_pairs()
                     : matching_e_step(source, target, result.params, config, pinned);
    result.e_step_seconds += std::chrono::duration<double>(Clock::now() - e_start).count();
    if (m.empty())
      throw EmCollapse("E-step produced no aligned pairs at iteration " + std::to_string(iteration), iteration);

    IterationRecord record{iteration, m.size(), m.total_weight, mean_cosine(source, target, m, result.params)};
    result.trace.push_back(record);
    if (observer) observer(record);

    const auto m_start = Clock::now();
    ModelParams next = m_step(source, target, m, result.params.mu, extent.n_trg);
    if (!config.update_mu) next.mu = result.params.mu;
    result.m_step_seconds += std::chrono::duration<double>(Clock::now() - m_start).count();
    result.params = std::move(next);
    result.matching = std::move(m);

    const double improvement = record.mean_cosine - previous;
    previous = record.mean_cosine;
    if (iteration >= config.min_iters && improvement < config.convergence_eps) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace bimatch
