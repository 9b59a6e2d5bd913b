#include "maskpinn/autodiff/tape.hpp"

#include <limits>

namespace maskpinn::ad {

std::int32_t Tape::push(Node node) {
  if (nodes_.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw std::length_error("tape node count exceeds int32 range");
  }
  nodes_.push_back(node);
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

Var Tape::parameter(double value) {
  const auto index = push({});
  parameters_.push_back(index);
  return {value, this, index};
}

Var Tape::variable(double value) { return {value, this, push({})}; }

Var Tape::unary(double value, const Var& a, double da) {
  return {value, this, push({a.index, -1, da, 0.0})};
}

Var Tape::binary(double value, const Var& a, double da, const Var& b, double db) {
  return {value, this, push({a.index, b.index, da, db})};
}

std::vector<double> Tape::adjoints(const Var& root) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (root.is_constant()) return adj;
  adj[static_cast<std::size_t>(root.index)] = 1.0;
  for (auto i = static_cast<std::int64_t>(root.index); i >= 0; --i) {
    const double g = adj[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += g * n.da;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += g * n.db;
  }
  return adj;
}

std::vector<double> Tape::gradient(const Var& root) const {
  if (!std::isfinite(root.value)) {
    throw NonFiniteError("gradient requested of non-finite root value " + std::to_string(root.value));
  }
  const auto adj = adjoints(root);
  std::vector<double> grad;
  grad.reserve(parameters_.size());
  for (const auto p : parameters_) grad.push_back(adj[static_cast<std::size_t>(p)]);
  return grad;
}

void Tape::reset() {
  nodes_.clear();
  parameters_.clear();
}

}  // namespace maskpinn::ad
