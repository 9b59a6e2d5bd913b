#pragma once

// Benchmark problems. Every problem has two input coordinates: (x, t) for the
// time-dependent ones and (x, y) for Helmholtz. Residuals are linear in the
// solution and its derivatives, so each is a fixed combination of local
// derivatives plus a source term.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maskpinn/autodiff/jet.hpp"
#include "maskpinn/kernels/engine.hpp"

namespace maskpinn::pde {

enum class ProblemKind { Heat, Convection, Wave, Helmholtz };

[[nodiscard]] std::string_view to_string(ProblemKind k);
[[nodiscard]] std::optional<ProblemKind> parse_problem(std::string_view name);

/// Helmholtz source term. Squared uses -(a pi)^2 factors, which the
/// manufactured solution sin(a1 pi x) sin(a2 pi y) requires; AsPrinted keeps
/// the unsquared -(a pi) factors and exists for regression checks only.
enum class HelmholtzSource { Squared, AsPrinted };

struct ProblemParams {
  double beta = 30.0;  // convection speed
  double c = 1.0;      // wave speed
  double a1 = 6.0;
  double a2 = 6.0;
  double k = 1.0;
  HelmholtzSource source = HelmholtzSource::Squared;

  bool operator==(const ProblemParams&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  [[nodiscard]] double length() const { return hi - lo; }
};

/// u and its pure first/second derivatives along coordinates 0 and 1.
template <class T>
struct LocalDerivs {
  T u{};
  std::array<T, 2> d1{};
  std::array<T, 2> d2{};
};

/// residual = u_coef*u + sum_k d1_coef[k]*u_k + sum_k d2_coef[k]*u_kk + source(x)
struct ResidualForm {
  double u = 0.0;
  std::array<double, 2> d1{0.0, 0.0};
  std::array<double, 2> d2{0.0, 0.0};
};

/// A Dirichlet face: coordinate `axis` fixed at `value`, u = 0 there.
struct Face {
  int axis = 0;
  double value = 0.0;
};

class Problem {
 public:
  Problem(ProblemKind kind, const ProblemParams& params);

  [[nodiscard]] ProblemKind kind() const { return kind_; }
  [[nodiscard]] std::string_view name() const { return to_string(kind_); }
  [[nodiscard]] const ProblemParams& params() const { return params_; }
  [[nodiscard]] const std::array<Interval, 2>& domain() const { return domain_; }
  [[nodiscard]] bool has_time() const { return kind_ != ProblemKind::Helmholtz; }
  [[nodiscard]] bool periodic() const { return kind_ == ProblemKind::Convection; }
  [[nodiscard]] bool has_initial_velocity() const { return kind_ == ProblemKind::Wave; }
  [[nodiscard]] std::span<const Face> faces() const { return faces_; }

  [[nodiscard]] const ResidualForm& form() const { return form_; }
  [[nodiscard]] double source(double x0, double x1) const;
  /// Jets needed at collocation points.
  [[nodiscard]] kernels::ChannelSpec residual_channels() const;
  /// Jets needed at initial-condition points.
  [[nodiscard]] kernels::ChannelSpec initial_channels() const;

  template <class T>
  T residual(const LocalDerivs<T>& d, double x0, double x1) const {
    T r = form_.u * d.u;
    for (int k = 0; k < 2; ++k) {
      if (form_.d1[k] != 0.0) r = r + form_.d1[k] * d.d1[k];
      if (form_.d2[k] != 0.0) r = r + form_.d2[k] * d.d2[k];
    }
    return r + source(x0, x1);
  }

  /// Closed-form solution; generic so it can be wrapped as a differentiable field.
  template <class T>
  T exact(const T& x0, const T& x1) const {
    using std::cos;
    using std::exp;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    switch (kind_) {
      case ProblemKind::Heat: return sin(pi * x0) * exp(-(pi * pi) * x1);
      case ProblemKind::Convection: return sin(x0 - params_.beta * x1);
      case ProblemKind::Wave: return sin(pi * x0) * cos(params_.c * pi * x1);
      case ProblemKind::Helmholtz: return sin(params_.a1 * pi * x0) * sin(params_.a2 * pi * x1);
    }
    return x0;
  }

  /// Initial value u(x, 0); meaningful only when has_time().
  [[nodiscard]] double initial_value(double x) const;

 private:
  ProblemKind kind_;
  ProblemParams params_;
  std::array<Interval, 2> domain_{};
  ResidualForm form_;
  std::vector<Face> faces_;
};

/// Local derivatives of a generic field f(x0, x1) from one jet pass per
/// input coordinate. `f` takes two ad::Jet<double> and returns one.
template <class F>
LocalDerivs<double> field_derivatives(F&& f, double x0, double x1) {
  const std::array<double, 2> x{x0, x1};
  auto wrapped = [&](std::span<const ad::Jet<double>> in) { return f(in[0], in[1]); };
  const ad::Jet<double> j0 = ad::jet_eval(wrapped, x, 0);
  const ad::Jet<double> j1 = ad::jet_eval(wrapped, x, 1);
  return {j0.value, {j0.d1, j1.d1}, {j0.d2, j1.d2}};
}

/// Uniform tensor grid over the domain with endpoints, (n0*n1) points as 2 x N
/// columns, coordinate 0 fastest.
[[nodiscard]] Eigen::MatrixXd grid(const Problem& p, int n0, int n1);

/// Default evaluation resolution per axis.
[[nodiscard]] std::array<int, 2> default_eval_grid(ProblemKind k);

}  // namespace maskpinn::pde
