#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bimatch/embeddings.hpp"

namespace bimatch {

// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
// the sign of R's diagonal folded into Q).
Eigen::MatrixXd random_orthogonal(Index dim, std::uint64_t seed);

// Matrix of n unit-norm Gaussian columns.
Eigen::MatrixXd random_unit_columns(Index dim, Index n, std::uint64_t seed);

struct PlantedSpec {
  Index n = 1000;
  Index dim = 50;
  double noise = 0.01;
  std::uint64_t seed = 1;
  // Words giving a numeral seed: the first this-many source words and
  // their planted targets are named "1000", "1001", ...
  Index numerals = 0;
};

// Source words s_j are random unit vectors; target column perm[j] is
// R s_j + N(0, noise^2 I), re-unit-normalized, for random orthogonal R and
// a random permutation perm.
struct PlantedFixture {
  EmbeddingSet source;
  EmbeddingSet target;
  Eigen::MatrixXd rotation;
  std::vector<Index> target_of_source;
};

PlantedFixture make_planted_rotation(const PlantedSpec& spec);

}  // namespace bimatch
