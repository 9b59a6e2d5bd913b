#include "maskpinn/nn/network.hpp"

#include <algorithm>
#include <stdexcept>

#include "maskpinn/rng.hpp"

namespace maskpinn::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Gelu: return "gelu";
    case Activation::Silu: return "silu";
    case Activation::Softplus: return "softplus";
  }
  return "?";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "gelu") return Activation::Gelu;
  if (name == "silu") return Activation::Silu;
  if (name == "softplus") return Activation::Softplus;
  return std::nullopt;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::ResNet: return "resnet";
    case Variant::Mask: return "mask";
    case Variant::BatchNorm: return "batchnorm";
    case Variant::LayerNorm: return "layernorm";
    case Variant::Laaf: return "laaf";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "vanilla") return Variant::Vanilla;
  if (name == "resnet") return Variant::ResNet;
  if (name == "mask") return Variant::Mask;
  if (name == "batchnorm" || name == "bn") return Variant::BatchNorm;
  if (name == "layernorm" || name == "ln") return Variant::LayerNorm;
  if (name == "laaf") return Variant::Laaf;
  return std::nullopt;
}

void validate(const Architecture& arch) {
  if (arch.depth < 1) throw std::invalid_argument("architecture.depth must be >= 1");
  if (arch.width < 1) throw std::invalid_argument("architecture.width must be >= 1");
  if (arch.input_dim < 1 || arch.input_dim > 2) {
    throw std::invalid_argument("architecture.input_dim must be 1 or 2");
  }
  if (arch.output_dim < 1) throw std::invalid_argument("architecture.output_dim must be >= 1");
  if (arch.variant == Variant::Mask && arch.depth % 2 != 0) {
    throw std::invalid_argument("architecture.depth must be even for the mask variant (two gated layers per block)");
  }
  if (arch.variant == Variant::LayerNorm && arch.width < 2) {
    throw std::invalid_argument("architecture.width must be >= 2 for layer normalization");
  }
  if (!std::isfinite(arch.alpha_init)) throw std::invalid_argument("architecture.alpha_init must be finite");
}

std::size_t Network::reserve(ParamRole role, std::size_t size, int fan_in, int fan_out) {
  const std::size_t offset = param_count_;
  groups_.push_back({role, offset, size, fan_in, fan_out});
  param_count_ += size;
  return offset;
}

void Network::dense(int in, int out, bool tracked) {
  Op op;
  op.kind = OpKind::Dense;
  op.in = in;
  op.out = out;
  op.weight = reserve(ParamRole::Weight, static_cast<std::size_t>(in) * static_cast<std::size_t>(out), in, out);
  op.bias = reserve(ParamRole::Bias, static_cast<std::size_t>(out));
  if (tracked) op.capture = hidden_layers_++;
  ops_.push_back(op);
}

void Network::pointwise(int width, Gate gate) {
  Op op;
  op.kind = OpKind::Pointwise;
  op.in = op.out = width;
  op.gate = gate;
  if (gate == Gate::Mask) op.gate_param = reserve(ParamRole::Alpha, static_cast<std::size_t>(width));
  if (gate == Gate::Scale) op.gate_param = reserve(ParamRole::Scale, 1);
  ops_.push_back(op);
}

void Network::norm(NormKind kind, int width) {
  Op op;
  op.kind = OpKind::Norm;
  op.in = op.out = width;
  op.norm = kind;
  op.gain = reserve(ParamRole::Gain, static_cast<std::size_t>(width));
  op.shift = reserve(ParamRole::Shift, static_cast<std::size_t>(width));
  if (kind == NormKind::Batch) op.norm_slot = bn_slots_++;
  ops_.push_back(op);
}

Network::Network(const Architecture& arch) : arch_(arch) {
  validate(arch);
  const int w = arch.width;
  auto skip = [this](OpKind kind, int width) {
    Op op;
    op.kind = kind;
    op.in = op.out = width;
    ops_.push_back(op);
  };

  switch (arch.variant) {
    case Variant::Vanilla:
    case Variant::BatchNorm:
    case Variant::LayerNorm:
    case Variant::Laaf: {
      for (int l = 0; l < arch.depth; ++l) {
        dense(l == 0 ? arch.input_dim : w, w, true);
        if (arch.variant == Variant::BatchNorm) norm(NormKind::Batch, w);
        if (arch.variant == Variant::LayerNorm) norm(NormKind::Layer, w);
        pointwise(w, arch.variant == Variant::Laaf ? Gate::Scale : Gate::None);
      }
      break;
    }
    case Variant::ResNet: {
      dense(arch.input_dim, w, true);
      pointwise(w, Gate::None);
      int remaining = arch.depth - 1;
      for (; remaining >= 2; remaining -= 2) {
        skip(OpKind::PushSkip, w);
        dense(w, w, true);
        pointwise(w, Gate::None);
        dense(w, w, true);
        pointwise(w, Gate::None);
        skip(OpKind::AddSkip, w);
      }
      if (remaining == 1) {
        dense(w, w, true);
        pointwise(w, Gate::None);
      }
      break;
    }
    case Variant::Mask: {
      dense(arch.input_dim, w, false);
      for (int b = 0; b < arch.depth / 2; ++b) {
        skip(OpKind::PushSkip, w);
        dense(w, w, true);
        pointwise(w, Gate::Mask);
        dense(w, w, true);
        pointwise(w, Gate::Mask);
        skip(OpKind::AddSkip, w);
      }
      break;
    }
  }
  dense(w, arch.output_dim, false);
}

int Network::max_width() const {
  int m = arch_.input_dim;
  for (const auto& op : ops_) m = std::max({m, op.in, op.out});
  return m;
}

NormState NormState::for_network(const Network& net) {
  NormState s;
  for (const auto& op : net.ops()) {
    if (op.kind == OpKind::Norm && op.norm == NormKind::Batch) {
      s.mean.push_back(Eigen::VectorXd::Zero(op.out));
      s.var.push_back(Eigen::VectorXd::Ones(op.out));
    }
  }
  return s;
}

Model::Model(const Architecture& arch) : net(arch), params(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()))), norm(NormState::for_network(net)) {}

Eigen::VectorXd init_params(const Network& net, std::uint64_t seed) {
  Rng rng(seed, streams::kInit);
  Eigen::VectorXd p(static_cast<Eigen::Index>(net.parameter_count()));
  for (const auto& g : net.groups()) {
    auto block = p.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.size));
    switch (g.role) {
      case ParamRole::Weight: {
        const double bound = glorot_bound(g.fan_in, g.fan_out);
        for (Eigen::Index i = 0; i < block.size(); ++i) block[i] = rng.uniform(-bound, bound);
        break;
      }
      case ParamRole::Bias:
      case ParamRole::Shift: block.setZero(); break;
      case ParamRole::Alpha: block.setConstant(net.architecture().alpha_init); break;
      case ParamRole::Scale:
      case ParamRole::Gain: block.setOnes(); break;
    }
  }
  return p;
}

Model make_model(const Architecture& arch, std::uint64_t seed) {
  Model m(arch);
  m.params = init_params(m.net, seed);
  return m;
}

}  // namespace maskpinn::nn
