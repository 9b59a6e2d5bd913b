#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "maskpinn/autodiff/jet.hpp"

namespace maskpinn::nn {

enum class Activation { Tanh, Gelu, Silu, Softplus };

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;
inline constexpr double kSoftplusCut = 30.0;

[[nodiscard]] std::string_view to_string(Activation a);
[[nodiscard]] std::optional<Activation> parse_activation(std::string_view name);

// Generic forms, usable with double, ad::Var, ad::Jet<double> and ad::Jet<ad::Var>.
// They are the reference definitions; the batched kernels use closed-form
// derivatives from activation_derivs() instead.

template <class T>
T sigmoid(const T& z) {
  using std::exp;
  return 1.0 / (1.0 + exp(-z));
}

template <class T>
T softplus(const T& z) {
  using std::exp;
  using std::log;
  const double v = ad::primal(z);
  if (v > kSoftplusCut) return z;
  if (v < -kSoftplusCut) return exp(z);
  return log(1.0 + exp(z));
}

template <class T>
T gelu(const T& z) {
  using std::tanh;
  return 0.5 * z * (1.0 + tanh(kGeluC * (z + kGeluA * (z * z * z))));
}

template <class T>
T silu(const T& z) {
  return z * sigmoid(z);
}

template <class T>
T activate(Activation a, const T& z) {
  using std::tanh;
  switch (a) {
    case Activation::Tanh: return tanh(z);
    case Activation::Gelu: return gelu(z);
    case Activation::Silu: return silu(z);
    case Activation::Softplus: return softplus(z);
  }
  return z;
}

/// sigma(z) and its first three derivatives.
struct Derivs3 {
  double f0 = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

namespace detail {

inline Derivs3 tanh_derivs(double z) {
  const double t = std::tanh(z);
  const double s = 1.0 - t * t;
  return {t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)};
}

inline Derivs3 sigmoid_derivs(double z) {
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  const double s1 = s * (1.0 - s);
  return {s, s1, s1 * (1.0 - 2.0 * s), s1 * (1.0 - 6.0 * s + 6.0 * s * s)};
}

}  // namespace detail

inline Derivs3 activation_derivs(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: return detail::tanh_derivs(z);
    case Activation::Gelu: {
      const double u = kGeluC * (z + kGeluA * z * z * z);
      const double u1 = kGeluC * (1.0 + 3.0 * kGeluA * z * z);
      const double u2 = 6.0 * kGeluA * kGeluC * z;
      const double u3 = 6.0 * kGeluA * kGeluC;
      const Derivs3 t = detail::tanh_derivs(u);
      const double g1 = t.f1 * u1;
      const double g2 = t.f2 * u1 * u1 + t.f1 * u2;
      const double g3 = t.f3 * u1 * u1 * u1 + 3.0 * t.f2 * u1 * u2 + t.f1 * u3;
      return {0.5 * z * (1.0 + t.f0), 0.5 * (1.0 + t.f0) + 0.5 * z * g1, g1 + 0.5 * z * g2,
              1.5 * g2 + 0.5 * z * g3};
    }
    case Activation::Silu: {
      const Derivs3 s = detail::sigmoid_derivs(z);
      return {z * s.f0, s.f0 + z * s.f1, 2.0 * s.f1 + z * s.f2, 3.0 * s.f2 + z * s.f3};
    }
    case Activation::Softplus: {
      const Derivs3 s = detail::sigmoid_derivs(z);
      double v;
      if (z > kSoftplusCut) {
        v = z;
      } else if (z < -kSoftplusCut) {
        v = std::exp(z);
      } else {
        v = std::log1p(std::exp(z));
      }
      return {v, s.f0, s.f1, s.f2};
    }
  }
  return {};
}

}  // namespace maskpinn::nn
