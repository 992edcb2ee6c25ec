#pragma once

#include <Eigen/Core>

#include "bimatch/error.hpp"

namespace bimatch {

// theta = (omega, mu): an orthogonal map from source into target space and
// the mean of the density that generates unmatched target words.
struct ModelParams {
  Eigen::MatrixXd omega;
  Eigen::VectorXd mu;

  static ModelParams identity(Index dim);

  Index dim() const { return omega.rows(); }
  // ||omega^T omega - I||_F
  double orthogonality_error() const;
  // Throws Error unless omega is square, mu matches and both are finite.
  void validate_shape() const;
};

inline constexpr double kOrthogonalityTolerance = 1e-6;

}  // namespace bimatch
