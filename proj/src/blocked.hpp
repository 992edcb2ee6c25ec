#pragma once

// Exact top-k search by blocked dense products. Internal to the library.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "bimatch/error.hpp"

namespace bimatch::detail {

struct Scored {
  double score;
  Index index;
};

// Higher score first; equal scores resolve to the lower index.
inline bool ranks_before(double score_a, Index a, double score_b, Index b) {
  return score_a > score_b || (score_a == score_b && a < b);
}

// Fixed-capacity best-first list living in caller-owned storage.
class TopKSlot {
 public:
  TopKSlot(Scored* storage, Index* count, Index capacity)
      : data_(storage), count_(count), capacity_(capacity) {}

  void offer(double score, Index index) {
    Index n = *count_;
    if (n == capacity_) {
      const Scored& worst = data_[n - 1];
      if (!ranks_before(score, index, worst.score, worst.index)) return;
      --n;
    }
    Index pos = n;
    while (pos > 0 && ranks_before(score, index, data_[pos - 1].score, data_[pos - 1].index)) {
      data_[pos] = data_[pos - 1];
      --pos;
    }
    data_[pos] = Scored{score, index};
    *count_ = n + 1;
  }

 private:
  Scored* data_;
  Index* count_;
  Index capacity_;
};

// Per-query top-k lists in one flat buffer.
class TopKTable {
 public:
  TopKTable(Index queries, Index k)
      : k_(k), storage_(static_cast<std::size_t>(queries * k)), counts_(static_cast<std::size_t>(queries), 0) {}

  TopKSlot slot(Index q) {
    return TopKSlot(storage_.data() + q * k_, counts_.data() + q, k_);
  }
  std::span<const Scored> row(Index q) const {
    return {storage_.data() + q * k_, static_cast<std::size_t>(counts_[static_cast<std::size_t>(q)])};
  }
  Index k() const { return k_; }

 private:
  Index k_;
  std::vector<Scored> storage_;
  std::vector<Index> counts_;
};

inline constexpr Index kQueryBlock = 256;
inline constexpr Index kCandidateBlock = 4096;

// For every pair of blocks, computes G = candidates_blockᵀ · queries_block
// ((c1-c0) x (q1-q0)) and calls fn(q0, q1, c0, c1, G). A query block is
// processed by exactly one thread, candidate blocks in ascending order, so
// fn may update per-query state for queries in [q0, q1) without locking and
// the result does not depend on the thread count.
template <class Fn>
void for_each_block(const Eigen::Ref<const Eigen::MatrixXd>& queries,
                    const Eigen::Ref<const Eigen::MatrixXd>& candidates, int threads, Fn&& fn) {
  if (queries.rows() != candidates.rows()) throw Error("dimension mismatch between query and candidate vectors");
  const Index nq = queries.cols();
  const Index nc = candidates.cols();
  if (nq == 0 || nc == 0) return;
  const Index query_blocks = (nq + kQueryBlock - 1) / kQueryBlock;
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    Eigen::MatrixXd g;
    try {
      for (Index b = next++; b < query_blocks; b = next++) {
        const Index q0 = b * kQueryBlock;
        const Index q1 = std::min(nq, q0 + kQueryBlock);
        for (Index c0 = 0; c0 < nc; c0 += kCandidateBlock) {
          const Index c1 = std::min(nc, c0 + kCandidateBlock);
          g.noalias() = candidates.middleCols(c0, c1 - c0).transpose() * queries.middleCols(q0, q1 - q0);
          fn(q0, q1, c0, c1, static_cast<const Eigen::MatrixXd&>(g));
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = query_blocks;
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(query_blocks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bimatch::detail
