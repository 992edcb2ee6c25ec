#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bimatch/assignment.hpp"
#include "bimatch/candidates.hpp"
#include "bimatch/embeddings.hpp"
#include "bimatch/model.hpp"
#include "bimatch/seeds.hpp"

namespace bimatch {

// Prior over edge sets. one_to_two lets a source word take two targets;
// two_to_two lets both sides take two; one_to_many aligns every target to
// its best source independently (sources may repeat).
enum class PriorKind { one_to_one, one_to_two, two_to_two, one_to_many };

std::string_view to_string(PriorKind prior);
// Accepts "1:1", "1:2", "2:2", "1:many" and the enumerator names.
PriorKind parse_prior(std::string_view text);

inline constexpr Index kDefaultRankRestriction = 40000;

struct EmConfig {
  Index k = 3;
  std::optional<RankRestriction> rank_restrict;
  double convergence_eps = 1e-6;
  int max_iters = 500;
  // Iterations run before the convergence test may stop the loop.
  int min_iters = 1;
  PriorKind prior = PriorKind::one_to_one;
  // Recorded for reports; normalization is applied before run_em.
  NormalizationScheme normalization = NormalizationScheme::unit;
  // When false, mu stays at its initial value (zero) throughout.
  bool update_mu = true;
  // Force the seed pairs into every E-step result.
  bool pin_seed = false;
  int threads = 1;

  void validate() const;
};

// Per target: the aligned source or kUnaligned.
struct Alignment {
  static constexpr Index kUnaligned = -1;

  std::vector<Index> source_of;
  std::vector<double> weight;  // w for aligned targets, 0 otherwise

  std::size_t aligned_count() const;
  // Aligned (target, source) pairs sorted by (source, target).
  Matching to_pairs() const;
};

struct IterationRecord {
  int iteration = 0;
  std::size_t matching_size = 0;
  double total_weight = 0.0;
  double mean_cosine = 0.0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

using EmTrace = std::vector<IterationRecord>;

struct EmResult {
  ModelParams params;
  Matching matching;
  EmTrace trace;
  bool converged = false;
  // Wall-clock totals; not part of the deterministic output.
  double e_step_seconds = 0.0;
  double m_step_seconds = 0.0;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

// Omega = U V^T where U S V^T = SVD(T_m S_m^T); columns c of both inputs are
// the two sides of the same pair.
Eigen::MatrixXd procrustes(const Eigen::Ref<const Eigen::MatrixXd>& source_matched,
                           const Eigen::Ref<const Eigen::MatrixXd>& target_matched);

// Mean of the selected target columns, or previous_mu if none are selected.
Eigen::VectorXd centroid(const Eigen::MatrixXd& target, std::span<const Index> selected,
                         const Eigen::VectorXd& previous_mu);

// Expands a graph for the 1:2 / 2:2 priors by adding vertex copies, and maps
// a matching on the expanded graph back to original indices.
class VertexDuplication {
 public:
  // Throws Error unless prior is one_to_two or two_to_two.
  VertexDuplication(PriorKind prior, Index n_src, Index n_trg);

  CandidateGraph expand(const CandidateGraph& g) const;
  // Copies are folded onto their originals; a pair reached through several
  // copies is kept once and total_weight is recomputed over distinct pairs.
  Matching merge(const Matching& expanded) const;

  int max_per_source() const { return 2; }
  int max_per_target() const { return prior_ == PriorKind::two_to_two ? 2 : 1; }

 private:
  PriorKind prior_;
  Index n_src_;
  Index n_trg_;
};

// Viterbi E-step for the matching priors (1:1, 1:2, 2:2).
Matching e_step_matching(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                         const ModelParams& params, const EmConfig& config);

// Viterbi E-step for the one-to-many prior: componentwise argmax with the
// unaligned option scoring 0.
Alignment e_step_one_to_many(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                             const ModelParams& params, const EmConfig& config);

// Procrustes over the pairs, centroid over targets in [0, n_trg) that have
// no pair. Throws EmCollapse if pairs is empty.
ModelParams m_step(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                   const Matching& pairs, const Eigen::VectorXd& previous_mu,
                   std::optional<Index> n_trg = std::nullopt);
ModelParams m_step(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                   const Alignment& alignment, const Eigen::VectorXd& previous_mu);

// Mean cos(t_i, omega s_j) over the pairs; 0 for an empty set.
double mean_cosine(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                   const Matching& pairs, const ModelParams& params);

// Viterbi EM. mu starts at 0 and omega is fit on the seed pairs alone; then
// E- and M-steps alternate until the mean cosine over the induced pairs
// improves by less than convergence_eps or max_iters is reached.
EmResult run_em(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                const SeedDictionary& seed, const EmConfig& config,
                const IterationObserver& observer = {});

}  // namespace bimatch
