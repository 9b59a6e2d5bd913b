#pragma once

// Composite physics loss L = l_ic*L_ic + l_bc*L_bc + l_r*L_r, each term a
// mean of squared violations. The interior, initial and boundary sets are
// forwarded separately, so batch norm sees per-set statistics.

#include <Eigen/Dense>
#include <vector>

#include "maskpinn/kernels/engine.hpp"
#include "maskpinn/nn/network.hpp"
#include "maskpinn/pde/problem.hpp"
#include "maskpinn/pde/sampling.hpp"

namespace maskpinn::train {

struct LossWeights {
  double ic = 1.0;
  double bc = 1.0;
  double r = 1.0;

  bool operator==(const LossWeights&) const = default;
};

struct LossComponents {
  double total = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double r = 0.0;
};

/// Batched loss and gradient over a fixed sample set.
class LossEvaluator {
 public:
  LossEvaluator(const pde::Problem& problem, const pde::SampleSet& samples, const LossWeights& weights,
                const kernels::ExecPolicy& policy = {});

  /// When `grad` is not null it is resized and overwritten with dL/dparams.
  /// When `running` is not null the interior pass updates batch-norm running
  /// statistics. Throws ad::NonFiniteError naming the first non-finite term.
  LossComponents evaluate(const nn::Model& model, Eigen::VectorXd* grad = nullptr,
                          nn::NormState* running = nullptr);

 private:
  const pde::Problem& problem_;
  const pde::SampleSet& samples_;
  LossWeights weights_;
  kernels::ExecPolicy policy_;
  kernels::ChannelSpec residual_spec_;
  kernels::ChannelSpec initial_spec_;
  std::vector<double> source_;
  kernels::ForwardRecord rec_r_, rec_ic_, rec_bc_;
  Eigen::MatrixXd adjoint_;
};

/// One-shot batched loss; see LossEvaluator::evaluate.
LossComponents total_loss(const nn::Model& model, const pde::Problem& problem, const pde::SampleSet& samples,
                          const LossWeights& weights, Eigen::VectorXd* grad = nullptr,
                          const kernels::ExecPolicy& policy = {});

/// The same loss computed by the scalar reference path: one jet pass per
/// input direction recorded on a tape, gradient by one reverse sweep.
/// Quadratic memory in network size; for tiny networks only.
LossComponents reference_loss(const nn::Model& model, const pde::Problem& problem, const pde::SampleSet& samples,
                              const LossWeights& weights, std::vector<double>* grad = nullptr);

}  // namespace maskpinn::train
