#pragma once

#include <Eigen/Dense>

#include "maskpinn/nn/network.hpp"

namespace maskpinn::nn {

/// Normalizes a features x batch block. Batch statistics run along each row
/// (needs >= 2 columns); layer statistics along each column (needs >= 2 rows).
/// Variance is population variance clamped below by eps; a clamped value of 0
/// maps the block to `shift`. Throws std::invalid_argument on bad shapes.
[[nodiscard]] Eigen::MatrixXd norm_forward(NormKind kind, const Eigen::MatrixXd& z, const Eigen::VectorXd& gain,
                                           const Eigen::VectorXd& shift, double eps);

}  // namespace maskpinn::nn
