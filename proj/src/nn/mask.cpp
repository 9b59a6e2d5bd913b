#include "maskpinn/nn/mask.hpp"

#include <stdexcept>

namespace maskpinn::nn {

std::vector<double> mask_fn(std::span<const double> z, std::span<const double> alpha) {
  if (z.size() != alpha.size()) throw std::invalid_argument("mask_fn: z and alpha differ in length");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = mask_gate(z[i], alpha[i]);
  return out;
}

void MaskBlock::check_shapes(Eigen::Index width) const {
  const bool ok = w1.rows() == width && w1.cols() == width && w2.rows() == width && w2.cols() == width &&
                  b1.size() == width && b2.size() == width && alpha1.size() == width && alpha2.size() == width;
  if (!ok) throw std::invalid_argument("mask block: every layer must have the block width");
}

Eigen::VectorXd mask_block_forward(const MaskBlock& block, const Eigen::VectorXd& h, Activation act) {
  block.check_shapes(h.size());
  auto layer = [act](const Eigen::VectorXd& z, const Eigen::VectorXd& alpha) {
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = mask_gate(z[i], alpha[i]) * activate(act, z[i]);
    return out;
  };
  const Eigen::VectorXd h1 = layer(block.w1 * h + block.b1, block.alpha1);
  const Eigen::VectorXd h2 = layer(block.w2 * h1 + block.b2, block.alpha2);
  return h + h2;
}

}  // namespace maskpinn::nn
