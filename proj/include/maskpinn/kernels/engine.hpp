#pragma once

// Batched jet propagation through a network program.
//
// Activations are stored as one matrix per layer with `width` rows and
// channels * points columns; channel c of point p lives in column c*N + p.
// Channel 0 is the value, followed by first derivatives along the enabled
// input directions, then pure second derivatives. Dense layers act on all
// channels with a single product; pointwise maps propagate second-order
// Taylor coefficients. backward() is the hand-derived reverse sweep of
// forward(), so parameter gradients of losses built from input derivatives
// cost one extra pass.
//
// Work is split over fixed-size column, row or point chunks with OpenMP.
// Chunk sizes never depend on the thread count and cross-chunk reductions are
// summed in chunk order, so results are bit-identical for any thread count.

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "maskpinn/nn/network.hpp"

namespace maskpinn::kernels {

struct ChannelSpec {
  int input_dim = 2;
  std::array<bool, 2> first{false, false};
  std::array<bool, 2> second{false, false};

  [[nodiscard]] static ChannelSpec value_only(int input_dim);
  [[nodiscard]] static ChannelSpec full(int input_dim);

  [[nodiscard]] int count() const;
  /// Channel index of d/dx_k, or -1.
  [[nodiscard]] int first_index(int k) const;
  /// Channel index of d2/dx_k2, or -1.
  [[nodiscard]] int second_index(int k) const;
  /// Turns on first-order channels required by enabled second-order ones.
  [[nodiscard]] ChannelSpec closed() const;

  bool operator==(const ChannelSpec&) const = default;
};

struct ExecPolicy {
  int threads = 1;
  Eigen::Index column_chunk = 256;
  Eigen::Index row_chunk = 64;
  Eigen::Index point_chunk = 64;
};

enum class Mode { Train, Eval };

inline constexpr double kNormEps = 1e-5;

/// Tape of one batched forward pass: the activation entering every op.
struct ForwardRecord {
  ChannelSpec spec;
  Eigen::Index points = 0;
  Mode mode = Mode::Train;
  std::vector<Eigen::MatrixXd> acts;  // acts[j] enters op j; acts.back() is the output
  // Batch-norm statistics per op (empty for other ops).
  std::vector<Eigen::VectorXd> bn_mean;
  std::vector<Eigen::VectorXd> bn_rstd;
  std::vector<Eigen::VectorXd> bn_clamped;
  // Pointwise derivative caches reused by backward(); skipped when
  // keep_pointwise is false, which makes the record forward-only.
  bool keep_pointwise = true;
  std::vector<Eigen::MatrixXd> pointwise;

  [[nodiscard]] const Eigen::MatrixXd& output() const { return acts.back(); }
};

/// Hidden-layer pre-activations (value channel), one width x N matrix per layer.
struct PreActCapture {
  std::vector<Eigen::MatrixXd> layers;
};

/// Seeds the jets of a d x N block of input points.
[[nodiscard]] Eigen::MatrixXd seed_inputs(const Eigen::MatrixXd& points, const ChannelSpec& spec);

/// Records a forward pass. In Train mode batch norm uses batch statistics
/// (constants with respect to input coordinates) and, when `running` is not
/// null, updates the running estimates; Eval mode uses the running estimates.
void forward(const nn::Model& model, const Eigen::MatrixXd& points, const ChannelSpec& spec, Mode mode,
             const ExecPolicy& policy, ForwardRecord& rec, nn::NormState* running = nullptr,
             PreActCapture* capture = nullptr);

/// Accumulates into `grad` the parameter gradient of a scalar whose adjoint
/// with respect to rec.output() is `output_adjoint`.
void backward(const nn::Model& model, const ForwardRecord& rec, const Eigen::MatrixXd& output_adjoint,
              Eigen::VectorXd& grad, const ExecPolicy& policy);

/// Eval-mode values at d x N points, processed in blocks; returns out_dim x N.
[[nodiscard]] Eigen::MatrixXd evaluate(const nn::Model& model, const Eigen::MatrixXd& points, const ExecPolicy& policy,
                                       PreActCapture* capture = nullptr, Eigen::Index block = 4096);

}  // namespace maskpinn::kernels
