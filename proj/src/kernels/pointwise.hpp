#pragma once

// Vectorized derivative planes of the pointwise maps. Each routine fills
// f0..f3 (phi and its z-derivatives) and, for gated maps, p0..p2 (their
// derivatives with respect to the gate parameter) for a rows x cols block.
// tanh and the logistic function are built on exp so that Eigen's packet
// exp does the heavy lifting; results agree with the scalar closed forms in
// nn/activation.hpp and nn/mask.hpp to rounding.
//
// Scratch arrays live in a thread-local workspace: allocating them per call
// costs more than the arithmetic.

#include <Eigen/Dense>

#include "maskpinn/nn/activation.hpp"

namespace maskpinn::kernels::detail {

using Eigen::ArrayXXd;

struct Planes {
  ArrayXXd f0, f1, f2, f3;
  ArrayXXd p0, p1, p2;
};

/// Planes of plain sigma(z), sigma(z) F(z; alpha) with one alpha per row, or
/// sigma(s z). The returned reference stays valid until the next call on the
/// same thread.
const Planes& activation_planes(nn::Activation a, const Eigen::Ref<const ArrayXXd>& z);
const Planes& masked_planes(nn::Activation a, const Eigen::Ref<const ArrayXXd>& z,
                            const Eigen::Ref<const Eigen::ArrayXd>& alpha);
const Planes& scaled_planes(nn::Activation a, const Eigen::Ref<const ArrayXXd>& z, double scale);

}  // namespace maskpinn::kernels::detail
