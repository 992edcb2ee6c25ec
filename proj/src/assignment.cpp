#include "bimatch/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>

namespace bimatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void sort_pairs(std::vector<MatchedPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
}

Matching finish(std::vector<MatchedPair> pairs) {
  sort_pairs(pairs);
  Matching m;
  for (const auto& p : pairs) m.total_weight += p.weight;
  m.pairs = std::move(pairs);
  return m;
}

std::vector<Index> complement(Index n, const std::vector<MatchedPair>& pairs, Index MatchedPair::*side) {
  std::vector<char> used(static_cast<std::size_t>(std::max<Index>(n, 0)), 0);
  for (const auto& p : pairs)
    if (p.*side >= 0 && p.*side < n) used[static_cast<std::size_t>(p.*side)] = 1;
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i)
    if (!used[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

}  // namespace

std::vector<Index> Matching::unmatched_targets(Index n_trg) const {
  return complement(n_trg, pairs, &MatchedPair::target);
}

std::vector<Index> Matching::unmatched_sources(Index n_src) const {
  return complement(n_src, pairs, &MatchedPair::source);
}

bool is_valid_matching(const Matching& m) { return degree_caps_hold(m, 1, 1); }

bool degree_caps_hold(const Matching& m, int max_per_source, int max_per_target) {
  std::unordered_map<Index, int> per_source;
  std::unordered_map<Index, int> per_target;
  std::vector<std::pair<Index, Index>> seen;
  seen.reserve(m.pairs.size());
  for (const auto& p : m.pairs) {
    if (++per_source[p.source] > max_per_source) return false;
    if (++per_target[p.target] > max_per_target) return false;
    seen.emplace_back(p.target, p.source);
  }
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

Matching hungarian_dense(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols())
    throw Error("hungarian_dense requires a square matrix, got " + std::to_string(weights.rows()) + "x" +
                std::to_string(weights.cols()));
  if (!weights.allFinite()) throw Error("hungarian_dense requires finite weights");
  const Index n = weights.rows();
  if (n == 0) return {};

  // Minimizes cost = -w. Rows are targets, columns sources; 1-based with
  // column 0 as the virtual start.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> row_of(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  std::vector<double> minv(static_cast<std::size_t>(n + 1));
  std::vector<char> used(static_cast<std::size_t>(n + 1));
  auto cost = [&](Index row, Index col) { return -weights(row - 1, col - 1); };

  for (Index row = 1; row <= n; ++row) {
    row_of[0] = row;
    Index col0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[static_cast<std::size_t>(col0)] = 1;
      const Index row0 = row_of[static_cast<std::size_t>(col0)];
      double delta = kInf;
      Index col1 = 0;
      for (Index col = 1; col <= n; ++col) {
        if (used[static_cast<std::size_t>(col)]) continue;
        const double cur = cost(row0, col) - u[static_cast<std::size_t>(row0)] - v[static_cast<std::size_t>(col)];
        if (cur < minv[static_cast<std::size_t>(col)]) {
          minv[static_cast<std::size_t>(col)] = cur;
          way[static_cast<std::size_t>(col)] = col0;
        }
        if (minv[static_cast<std::size_t>(col)] < delta) {
          delta = minv[static_cast<std::size_t>(col)];
          col1 = col;
        }
      }
      for (Index col = 0; col <= n; ++col) {
        if (used[static_cast<std::size_t>(col)]) {
          u[static_cast<std::size_t>(row_of[static_cast<std::size_t>(col)])] += delta;
          v[static_cast<std::size_t>(col)] -= delta;
        } else {
          minv[static_cast<std::size_t>(col)] -= delta;
        }
      }
      col0 = col1;
    } while (row_of[static_cast<std::size_t>(col0)] != 0);
    do {
      const Index col1 = way[static_cast<std::size_t>(col0)];
      row_of[static_cast<std::size_t>(col0)] = row_of[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<MatchedPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n));
  for (Index col = 1; col <= n; ++col) {
    const Index row = row_of[static_cast<std::size_t>(col)];
    pairs.push_back({row - 1, col - 1, weights(row - 1, col - 1)});
  }
  return finish(std::move(pairs));
}

namespace {

// Rectangular min-cost assignment of every source row to one column, where
// columns are the targets followed by one private zero-cost "unmatched"
// column per source. Successive shortest augmenting paths with row/column
// potentials; all bookkeeping is reset only where a search touched it, so
// an augmentation costs time proportional to the region it explores.
class SparseAssignment {
 public:
  explicit SparseAssignment(const CandidateGraph& g)
      : g_(g),
        n_rows_(g.source_count()),
        n_trg_(g.target_count()),
        n_cols_(g.target_count() + g.source_count()),
        u_(static_cast<std::size_t>(n_rows_), 0.0),
        v_(static_cast<std::size_t>(n_cols_), 0.0),
        col_of_row_(static_cast<std::size_t>(n_rows_), -1),
        row_of_col_(static_cast<std::size_t>(n_cols_), -1),
        dist_(static_cast<std::size_t>(n_cols_), kInf),
        pred_(static_cast<std::size_t>(n_cols_), -1),
        scanned_col_(static_cast<std::size_t>(n_cols_), 0) {}

  Matching solve() {
    for (Index row = 0; row < n_rows_; ++row) augment(row);
    std::vector<MatchedPair> pairs;
    for (Index row = 0; row < n_rows_; ++row) {
      const Index col = col_of_row_[static_cast<std::size_t>(row)];
      if (col < n_trg_) pairs.push_back({col, row, weight_of(row, col)});
    }
    return finish(std::move(pairs));
  }

 private:
  using HeapItem = std::pair<double, Index>;  // (distance, column)

  Index dummy_of(Index row) const { return n_trg_ + row; }

  double weight_of(Index row, Index col) const {
    for (const auto& e : g_.edges_of(row))
      if (e.target == col) return e.weight;
    return 0.0;
  }

  void relax(Index row, Index col, double cost, double base) {
    if (scanned_col_[static_cast<std::size_t>(col)]) return;
    const double reduced = base + cost - u_[static_cast<std::size_t>(row)] - v_[static_cast<std::size_t>(col)];
    auto& d = dist_[static_cast<std::size_t>(col)];
    if (reduced < d) {
      if (d == kInf) touched_cols_.push_back(col);
      d = reduced;
      pred_[static_cast<std::size_t>(col)] = row;
      heap_.emplace(reduced, col);
    }
  }

  void augment(Index start) {
    double min_val = 0.0;
    Index row = start;
    Index sink = -1;
    scanned_rows_.clear();
    scanned_cols_.clear();
    touched_cols_.clear();
    heap_ = {};

    while (sink < 0) {
      scanned_rows_.push_back(row);
      for (const auto& e : g_.edges_of(row)) relax(row, e.target, -e.weight, min_val);
      relax(row, dummy_of(row), 0.0, min_val);

      // The start row's dummy is always reachable, so the heap cannot run dry
      // before a free column is found.
      Index col = -1;
      while (!heap_.empty()) {
        auto [d, c] = heap_.top();
        heap_.pop();
        if (scanned_col_[static_cast<std::size_t>(c)] || d > dist_[static_cast<std::size_t>(c)]) continue;
        min_val = d;
        col = c;
        break;
      }
      if (col < 0) throw Error("sparse assignment: no augmenting path (internal error)");
      const Index owner = row_of_col_[static_cast<std::size_t>(col)];
      if (owner < 0) {
        sink = col;
      } else {
        scanned_col_[static_cast<std::size_t>(col)] = 1;
        scanned_cols_.push_back(col);
        row = owner;
      }
    }

    u_[static_cast<std::size_t>(start)] += min_val;
    for (Index r : scanned_rows_) {
      if (r == start) continue;
      u_[static_cast<std::size_t>(r)] +=
          min_val - dist_[static_cast<std::size_t>(col_of_row_[static_cast<std::size_t>(r)])];
    }
    for (Index c : scanned_cols_) v_[static_cast<std::size_t>(c)] -= min_val - dist_[static_cast<std::size_t>(c)];

    for (Index col = sink;;) {
      const Index r = pred_[static_cast<std::size_t>(col)];
      row_of_col_[static_cast<std::size_t>(col)] = r;
      std::swap(col_of_row_[static_cast<std::size_t>(r)], col);
      if (r == start) break;
    }

    for (Index c : touched_cols_) {
      dist_[static_cast<std::size_t>(c)] = kInf;
      scanned_col_[static_cast<std::size_t>(c)] = 0;
    }
  }

  const CandidateGraph& g_;
  Index n_rows_;
  Index n_trg_;
  Index n_cols_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<Index> col_of_row_;
  std::vector<Index> row_of_col_;
  std::vector<double> dist_;
  std::vector<Index> pred_;
  std::vector<char> scanned_col_;
  std::vector<Index> scanned_rows_;
  std::vector<Index> scanned_cols_;
  std::vector<Index> touched_cols_;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap_;
};

}  // namespace

Matching solve_sparse_lap(const CandidateGraph& g) { return SparseAssignment(g).solve(); }

Matching brute_force_matching(const CandidateGraph& g) {
  const Index n_src = g.source_count();
  const Index n_trg = g.target_count();
  if (n_src + n_trg > kBruteForceVertexLimit)
    throw Error("brute_force_matching limited to " + std::to_string(kBruteForceVertexLimit) + " vertices, got " +
                std::to_string(n_src + n_trg));

  std::vector<MatchedPair> current;
  std::vector<MatchedPair> best;
  double best_weight = 0.0;
  std::vector<char> used(static_cast<std::size_t>(n_trg), 0);

  std::function<void(Index, double)> visit = [&](Index source, double weight) {
    if (source == n_src) {
      if (weight > best_weight) {
        best_weight = weight;
        best = current;
      }
      return;
    }
    visit(source + 1, weight);
    for (const auto& e : g.edges_of(source)) {
      if (used[static_cast<std::size_t>(e.target)]) continue;
      used[static_cast<std::size_t>(e.target)] = 1;
      current.push_back({e.target, source, e.weight});
      visit(source + 1, weight + e.weight);
      current.pop_back();
      used[static_cast<std::size_t>(e.target)] = 0;
    }
  };
  visit(0, 0.0);
  return finish(std::move(best));
}

}  // namespace bimatch
