#pragma once

// Second-order Taylor jets along one seeded input direction.
//
// A Jet carries (f, df/dx_k, d2f/dx_k^2). The scalar type T is either double
// (pure input derivatives) or ad::Var, in which case every jet coefficient is
// recorded on a tape and parameter gradients of losses built from input
// derivatives come out of a single reverse sweep.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "maskpinn/autodiff/tape.hpp"

namespace maskpinn::ad {

template <class T>
struct Jet {
  T value{};
  T d1{};
  T d2{};

  Jet() = default;
  Jet(const T& v) : value(v), d1(0.0), d2(0.0) {}  // NOLINT: constants lift to jets
  Jet(const T& v, const T& first, const T& second) : value(v), d1(first), d2(second) {}

  [[nodiscard]] static Jet seeded(const T& v) { return {v, T(1.0), T(0.0)}; }
};

template <class T>
Jet<T> operator+(const Jet<T>& u, const Jet<T>& v) {
  return {u.value + v.value, u.d1 + v.d1, u.d2 + v.d2};
}
template <class T>
Jet<T> operator-(const Jet<T>& u, const Jet<T>& v) {
  return {u.value - v.value, u.d1 - v.d1, u.d2 - v.d2};
}
template <class T>
Jet<T> operator-(const Jet<T>& u) {
  return {-u.value, -u.d1, -u.d2};
}
template <class T>
Jet<T> operator*(const Jet<T>& u, const Jet<T>& v) {
  return {u.value * v.value, u.d1 * v.value + u.value * v.d1,
          u.d2 * v.value + 2.0 * (u.d1 * v.d1) + u.value * v.d2};
}
template <class T>
Jet<T> operator/(const Jet<T>& u, const Jet<T>& v) {
  // q = u / v; from u = q v: q' = (u' - q v') / v, q'' = (u'' - 2 q' v' - q v'') / v.
  const T inv = T(1.0) / v.value;
  const T q = u.value * inv;
  const T q1 = (u.d1 - q * v.d1) * inv;
  const T q2 = (u.d2 - 2.0 * (q1 * v.d1) - q * v.d2) * inv;
  return {q, q1, q2};
}

template <class T>
Jet<T> operator+(const Jet<T>& u, double c) {
  return {u.value + c, u.d1, u.d2};
}
template <class T>
Jet<T> operator+(double c, const Jet<T>& u) {
  return u + c;
}
template <class T>
Jet<T> operator-(const Jet<T>& u, double c) {
  return {u.value - c, u.d1, u.d2};
}
template <class T>
Jet<T> operator-(double c, const Jet<T>& u) {
  return {c - u.value, -u.d1, -u.d2};
}
template <class T>
Jet<T> operator*(const Jet<T>& u, double c) {
  return {u.value * c, u.d1 * c, u.d2 * c};
}
template <class T>
Jet<T> operator*(double c, const Jet<T>& u) {
  return u * c;
}
template <class T>
Jet<T> operator/(const Jet<T>& u, double c) {
  return u * (1.0 / c);
}
template <class T>
Jet<T> operator/(double c, const Jet<T>& u) {
  return Jet<T>(T(c)) / u;
}

template <class T>
Jet<T>& operator+=(Jet<T>& u, const Jet<T>& v) {
  return u = u + v;
}
template <class T>
Jet<T>& operator*=(Jet<T>& u, const Jet<T>& v) {
  return u = u * v;
}

/// Composition with a scalar function whose value and first two derivatives
/// at u.value are f0, f1, f2.
template <class T>
Jet<T> chain(const Jet<T>& u, const T& f0, const T& f1, const T& f2) {
  return {f0, f1 * u.d1, f2 * (u.d1 * u.d1) + f1 * u.d2};
}

template <class T>
Jet<T> exp(const Jet<T>& u) {
  using std::exp;
  const T e = exp(u.value);
  return chain(u, e, e, e);
}
template <class T>
Jet<T> log(const Jet<T>& u) {
  using std::log;
  const T inv = T(1.0) / u.value;
  return chain(u, log(u.value), inv, -(inv * inv));
}
template <class T>
Jet<T> sin(const Jet<T>& u) {
  using std::cos;
  using std::sin;
  const T s = sin(u.value);
  return chain(u, s, cos(u.value), -s);
}
template <class T>
Jet<T> cos(const Jet<T>& u) {
  using std::cos;
  using std::sin;
  const T c = cos(u.value);
  return chain(u, c, -sin(u.value), -c);
}
template <class T>
Jet<T> tanh(const Jet<T>& u) {
  using std::tanh;
  const T t = tanh(u.value);
  const T s = T(1.0) - t * t;
  return chain(u, t, s, -2.0 * (t * s));
}
template <class T>
Jet<T> sqrt(const Jet<T>& u) {
  using std::sqrt;
  const T s = sqrt(u.value);
  const T f1 = 0.5 / s;
  return chain(u, s, f1, -0.5 * f1 / u.value);
}
template <class T>
Jet<T> pow(const Jet<T>& u, double p) {
  using std::pow;
  const T f2 = p * (p - 1.0) * pow(u.value, p - 2.0);
  const T f1 = p * pow(u.value, p - 1.0);
  return chain(u, pow(u.value, p), f1, f2);
}

template <class T>
T value_of(const Jet<T>& u) {
  return u.value;
}
inline double primal(double x) { return x; }
inline double primal(const Var& x) { return x.value; }
template <class T>
double primal(const Jet<T>& u) {
  return primal(u.value);
}

[[nodiscard]] inline bool all_finite(const Jet<double>& j) {
  return std::isfinite(j.value) && std::isfinite(j.d1) && std::isfinite(j.d2);
}

/// Evaluates f at x with input coordinate `direction` seeded, returning
/// (f(x), df/dx_k, d2f/dx_k^2). `f` must be callable with a
/// std::span<const Jet<double>>; using an operation that Jet does not define
/// fails to compile. Non-finite intermediate values propagate; check the
/// result with all_finite().
template <class F>
Jet<double> jet_eval(F&& f, std::span<const double> x, std::size_t direction) {
  if (direction >= x.size()) throw std::out_of_range("jet_eval: direction outside input dimension");
  std::vector<Jet<double>> seeded;
  seeded.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    seeded.push_back(j == direction ? Jet<double>::seeded(x[j]) : Jet<double>(x[j]));
  }
  return f(std::span<const Jet<double>>(seeded));
}

}  // namespace maskpinn::ad
