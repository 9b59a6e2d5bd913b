#pragma once

// Network variants expressed as a flat program of layer operations over one
// contiguous parameter vector. The batched engine and the scalar reference
// both interpret the same program.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskpinn/nn/activation.hpp"

namespace maskpinn::nn {

enum class Variant { Vanilla, ResNet, Mask, BatchNorm, LayerNorm, Laaf };

[[nodiscard]] std::string_view to_string(Variant v);
[[nodiscard]] std::optional<Variant> parse_variant(std::string_view name);

struct Architecture {
  Variant variant = Variant::Vanilla;
  /// Hidden layers. For Mask this counts gated layers (two per block); the
  /// linear input projection and the head come on top.
  int depth = 1;
  int width = 16;
  Activation activation = Activation::Tanh;
  double alpha_init = 1.0;
  int input_dim = 2;
  int output_dim = 1;

  bool operator==(const Architecture&) const = default;
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const Architecture& arch);

enum class OpKind { Dense, Pointwise, Norm, PushSkip, AddSkip };
enum class Gate { None, Mask, Scale };
enum class NormKind { Batch, Layer };

struct Op {
  OpKind kind = OpKind::Dense;
  int in = 0;
  int out = 0;
  // Dense: weights are an out x in column-major block followed by `out` biases.
  std::size_t weight = 0;
  std::size_t bias = 0;
  /// Hidden-layer index when this Dense produces a tracked pre-activation.
  int capture = -1;
  // Pointwise
  Gate gate = Gate::None;
  std::size_t gate_param = 0;  // Mask: `out` entries; Scale: one entry
  // Norm
  NormKind norm = NormKind::Batch;
  std::size_t gain = 0;
  std::size_t shift = 0;
  int norm_slot = -1;  // running-statistics slot for batch norm
};

enum class ParamRole { Weight, Bias, Alpha, Scale, Gain, Shift };

struct ParamGroup {
  ParamRole role;
  std::size_t offset;
  std::size_t size;
  int fan_in = 0;
  int fan_out = 0;
};

class Network {
 public:
  explicit Network(const Architecture& arch);

  [[nodiscard]] const Architecture& architecture() const { return arch_; }
  [[nodiscard]] std::span<const Op> ops() const { return ops_; }
  [[nodiscard]] std::span<const ParamGroup> groups() const { return groups_; }
  [[nodiscard]] std::size_t parameter_count() const { return param_count_; }
  [[nodiscard]] int hidden_layers() const { return hidden_layers_; }
  [[nodiscard]] int batch_norm_slots() const { return bn_slots_; }
  [[nodiscard]] int max_width() const;

 private:
  void dense(int in, int out, bool tracked);
  void pointwise(int width, Gate gate);
  void norm(NormKind kind, int width);
  std::size_t reserve(ParamRole role, std::size_t size, int fan_in = 0, int fan_out = 0);

  Architecture arch_;
  std::vector<Op> ops_;
  std::vector<ParamGroup> groups_;
  std::size_t param_count_ = 0;
  int hidden_layers_ = 0;
  int bn_slots_ = 0;
};

/// Running batch-norm statistics; used instead of batch statistics at evaluation.
struct NormState {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::VectorXd> var;
  double momentum = 0.1;

  static NormState for_network(const Network& net);
};

struct Model {
  Network net;
  Eigen::VectorXd params;
  NormState norm;

  explicit Model(const Architecture& arch);
};

/// Glorot-uniform weights on +-sqrt(6/(fan_in+fan_out)), zero biases,
/// alpha = arch.alpha_init, adaptive scales and norm gains 1, norm shifts 0.
[[nodiscard]] Eigen::VectorXd init_params(const Network& net, std::uint64_t seed);
[[nodiscard]] Model make_model(const Architecture& arch, std::uint64_t seed);

[[nodiscard]] inline double glorot_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace maskpinn::nn
