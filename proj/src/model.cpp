#include "bimatch/model.hpp"

namespace bimatch {

ModelParams ModelParams::identity(Index dim) {
  return ModelParams{Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)};
}

double ModelParams::orthogonality_error() const {
  return (omega.transpose() * omega - Eigen::MatrixXd::Identity(omega.cols(), omega.cols())).norm();
}

void ModelParams::validate_shape() const {
  if (omega.rows() != omega.cols()) throw Error("omega must be square");
  if (mu.size() != omega.rows()) throw Error("mu dimension does not match omega");
  if (!omega.allFinite() || !mu.allFinite()) throw Error("model parameters must be finite");
}

}  // namespace bimatch
