#pragma once

// Scalar reverse-mode tape. Every elementary operation on a Var appends one
// node holding at most two operand indices and their local partials; a single
// reverse sweep then yields the adjoint of one scalar root for all leaves.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace maskpinn::ad {

/// Raised when a computation that must stay finite produced inf or NaN.
class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

class Tape;

/// A tape-recorded real. `index < 0` marks a constant that owns no node.
struct Var {
  double value = 0.0;
  Tape* tape = nullptr;
  std::int32_t index = -1;

  Var() = default;
  Var(double v) : value(v) {}  // NOLINT: implicit lift of constants is the point
  Var(double v, Tape* t, std::int32_t i) : value(v), tape(t), index(i) {}

  [[nodiscard]] bool is_constant() const { return index < 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that is reported by gradient(). Slots are numbered in creation order.
  Var parameter(double value);
  /// A leaf that is not a parameter (inputs, data).
  Var variable(double value);

  Var unary(double value, const Var& a, double da);
  Var binary(double value, const Var& a, double da, const Var& b, double db);

  /// Gradient of `root` with respect to every parameter slot.
  /// Throws NonFiniteError when the root value is not finite.
  [[nodiscard]] std::vector<double> gradient(const Var& root) const;
  /// Adjoint of `root` for every node on the tape.
  [[nodiscard]] std::vector<double> adjoints(const Var& root) const;

  void reset();
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] std::size_t parameter_count() const { return parameters_.size(); }

 private:
  struct Node {
    std::int32_t a = -1;
    std::int32_t b = -1;
    double da = 0.0;
    double db = 0.0;
  };

  std::int32_t push(Node node);

  std::vector<Node> nodes_;
  std::vector<std::int32_t> parameters_;
};

// Arithmetic -----------------------------------------------------------------

namespace detail {
inline Tape* tape_of(const Var& a, const Var& b) { return a.tape != nullptr ? a.tape : b.tape; }
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.value + b.value};
  return detail::tape_of(a, b)->binary(a.value + b.value, a, 1.0, b, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.value - b.value};
  return detail::tape_of(a, b)->binary(a.value - b.value, a, 1.0, b, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
  if (a.is_constant() && b.is_constant()) return {a.value * b.value};
  return detail::tape_of(a, b)->binary(a.value * b.value, a, b.value, b, a.value);
}
inline Var operator/(const Var& a, const Var& b) {
  const double q = a.value / b.value;
  if (a.is_constant() && b.is_constant()) return {q};
  return detail::tape_of(a, b)->binary(q, a, 1.0 / b.value, b, -q / b.value);
}
inline Var operator-(const Var& a) {
  if (a.is_constant()) return {-a.value};
  return a.tape->unary(-a.value, a, -1.0);
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

namespace detail {
inline Var apply(const Var& a, double value, double derivative) {
  if (a.is_constant()) return {value};
  return a.tape->unary(value, a, derivative);
}
}  // namespace detail

inline Var exp(const Var& a) {
  const double e = std::exp(a.value);
  return detail::apply(a, e, e);
}
inline Var log(const Var& a) { return detail::apply(a, std::log(a.value), 1.0 / a.value); }
inline Var sin(const Var& a) { return detail::apply(a, std::sin(a.value), std::cos(a.value)); }
inline Var cos(const Var& a) { return detail::apply(a, std::cos(a.value), -std::sin(a.value)); }
inline Var tanh(const Var& a) {
  const double t = std::tanh(a.value);
  return detail::apply(a, t, 1.0 - t * t);
}
inline Var sqrt(const Var& a) {
  const double s = std::sqrt(a.value);
  return detail::apply(a, s, 0.5 / s);
}
inline Var pow(const Var& a, double p) {
  return detail::apply(a, std::pow(a.value, p), p * std::pow(a.value, p - 1.0));
}
inline Var log1p(const Var& a) { return detail::apply(a, std::log1p(a.value), 1.0 / (1.0 + a.value)); }

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value; }

}  // namespace maskpinn::ad
