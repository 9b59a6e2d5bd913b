#pragma once

// The mask gate F(z) = 1 - exp(-(alpha z)^2): zero at the origin, even in z,
// saturating towards 1 as |z| grows. A gated layer outputs F(z) * sigma(z).

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "maskpinn/nn/activation.hpp"

namespace maskpinn::nn {

template <class T, class A>
T mask_gate(const T& z, const A& alpha) {
  using std::exp;
  const T s = alpha * z;
  return 1.0 - exp(-(s * s));
}

/// Elementwise gate over a layer. Throws std::invalid_argument when z and
/// alpha differ in length.
[[nodiscard]] std::vector<double> mask_fn(std::span<const double> z, std::span<const double> alpha);

/// Parameters of one residual block: two square dense layers, each followed
/// by a masked activation.
struct MaskBlock {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;
  Eigen::VectorXd alpha1, alpha2;

  /// Throws std::invalid_argument unless every shape equals `width`.
  void check_shapes(Eigen::Index width) const;
};

/// H + F2(z2) * sigma(z2) with z2 = w2 (F1(z1) * sigma(z1)) + b2, z1 = w1 H + b1.
[[nodiscard]] Eigen::VectorXd mask_block_forward(const MaskBlock& block, const Eigen::VectorXd& h, Activation act);

/// Derivatives of a pointwise map z -> phi(z; p) with one scalar parameter p:
/// f[n] = d^n phi / dz^n for n <= 3 and p[n] = d/dp of f[n] for n <= 2.
struct PointwiseDerivs {
  double f0 = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;
};

inline PointwiseDerivs plain_derivs(Activation a, double z) {
  const Derivs3 s = activation_derivs(a, z);
  return {s.f0, s.f1, s.f2, s.f3, 0.0, 0.0, 0.0};
}

/// phi(z; alpha) = F(z; alpha) * sigma(z).
inline PointwiseDerivs masked_derivs(Activation a, double z, double alpha) {
  const Derivs3 s = activation_derivs(a, z);
  const double a2 = alpha * alpha;
  const double z2 = z * z;
  const double e = std::exp(-a2 * z2);
  const double g0 = 1.0 - e;
  const double g1 = 2.0 * a2 * z * e;
  const double g2 = (2.0 * a2 - 4.0 * a2 * a2 * z2) * e;
  const double g3 = (8.0 * a2 * a2 * a2 * z2 * z - 12.0 * a2 * a2 * z) * e;
  const double h0 = 2.0 * alpha * z2 * e;
  const double h1 = (4.0 * alpha * z - 4.0 * alpha * a2 * z2 * z) * e;
  const double h2 = (4.0 * alpha - 20.0 * alpha * a2 * z2 + 8.0 * alpha * a2 * a2 * z2 * z2) * e;

  PointwiseDerivs d;
  d.f0 = g0 * s.f0;
  d.f1 = g1 * s.f0 + g0 * s.f1;
  d.f2 = g2 * s.f0 + 2.0 * g1 * s.f1 + g0 * s.f2;
  d.f3 = g3 * s.f0 + 3.0 * g2 * s.f1 + 3.0 * g1 * s.f2 + g0 * s.f3;
  d.p0 = h0 * s.f0;
  d.p1 = h1 * s.f0 + h0 * s.f1;
  d.p2 = h2 * s.f0 + 2.0 * h1 * s.f1 + h0 * s.f2;
  return d;
}

/// phi(z; s) = sigma(s z), the layer-wise adaptive activation.
inline PointwiseDerivs scaled_derivs(Activation a, double z, double scale) {
  const Derivs3 s = activation_derivs(a, scale * z);
  const double sc2 = scale * scale;
  PointwiseDerivs d;
  d.f0 = s.f0;
  d.f1 = scale * s.f1;
  d.f2 = sc2 * s.f2;
  d.f3 = sc2 * scale * s.f3;
  d.p0 = z * s.f1;
  d.p1 = s.f1 + scale * z * s.f2;
  d.p2 = 2.0 * scale * s.f2 + sc2 * z * s.f3;
  return d;
}

}  // namespace maskpinn::nn
