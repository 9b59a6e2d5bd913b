#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace maskpinn::train {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;  // entries >= 0
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(Eigen::Index n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// Bias-corrected Adam update in place. Throws std::invalid_argument on shape
/// mismatch and ad::NonFiniteError on a non-finite gradient (state untouched).
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr);

}  // namespace maskpinn::train
