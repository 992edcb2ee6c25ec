#pragma once

#include <vector>

#include <Eigen/Core>

#include "bimatch/candidates.hpp"
#include "bimatch/error.hpp"

namespace bimatch {

struct MatchedPair {
  Index target;
  Index source;
  double weight;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

// An edge set between target and source words. Solver outputs are sorted by
// (source, target). Under the 1:1 prior no vertex repeats; the 1:2, 2:2 and
// one-to-many priors relax that, see degree_caps_hold().
struct Matching {
  std::vector<MatchedPair> pairs;
  double total_weight = 0.0;

  std::size_t size() const noexcept { return pairs.size(); }
  bool empty() const noexcept { return pairs.empty(); }
  // Targets in [0, n_trg) with no incident pair, ascending.
  std::vector<Index> unmatched_targets(Index n_trg) const;
  std::vector<Index> unmatched_sources(Index n_src) const;
};

// True if no target and no source index occurs twice.
bool is_valid_matching(const Matching& m);

// True if no (target, source) pair repeats, every source has at most
// max_per_source pairs and every target at most max_per_target.
bool degree_caps_hold(const Matching& m, int max_per_source, int max_per_target);

// Maximum-weight perfect matching on a square dense matrix,
// weights(i, j) = w_ij for target i, source j. O(n^3); used as an oracle.
Matching hungarian_dense(const Eigen::MatrixXd& weights);

// Maximum-weight partial matching restricted to the edges of g. Every vertex
// may stay unmatched at zero cost, so edges of negative weight are never
// selected. Shortest augmenting paths (Dijkstra over the sparse adjacency)
// with dual potentials, deterministic for a given graph.
Matching solve_sparse_lap(const CandidateGraph& g);

inline constexpr int kBruteForceVertexLimit = 16;

// Exhaustive enumeration of all partial matchings of g. Requires
// n_src + n_trg <= kBruteForceVertexLimit.
Matching brute_force_matching(const CandidateGraph& g);

}  // namespace bimatch
