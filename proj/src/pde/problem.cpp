#include "maskpinn/pde/problem.hpp"

#include <stdexcept>

namespace maskpinn::pde {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Heat: return "heat";
    case ProblemKind::Convection: return "convection";
    case ProblemKind::Wave: return "wave";
    case ProblemKind::Helmholtz: return "helmholtz";
  }
  return "?";
}

std::optional<ProblemKind> parse_problem(std::string_view name) {
  if (name == "heat") return ProblemKind::Heat;
  if (name == "convection") return ProblemKind::Convection;
  if (name == "wave") return ProblemKind::Wave;
  if (name == "helmholtz") return ProblemKind::Helmholtz;
  return std::nullopt;
}

Problem::Problem(ProblemKind kind, const ProblemParams& params) : kind_(kind), params_(params) {
  switch (kind) {
    case ProblemKind::Heat:
      domain_ = {Interval{0.0, 1.0}, Interval{0.0, 1.0}};
      form_.d1[1] = 1.0;
      form_.d2[0] = -1.0;
      faces_ = {{0, 0.0}, {0, 1.0}};
      break;
    case ProblemKind::Convection:
      domain_ = {Interval{0.0, 2.0 * kPi}, Interval{0.0, 1.0}};
      form_.d1[1] = 1.0;
      form_.d1[0] = params.beta;
      break;
    case ProblemKind::Wave:
      domain_ = {Interval{0.0, 1.0}, Interval{0.0, 5.0}};
      form_.d2[1] = 1.0;
      form_.d2[0] = -params.c * params.c;
      faces_ = {{0, 0.0}, {0, 1.0}};
      break;
    case ProblemKind::Helmholtz:
      domain_ = {Interval{-1.0, 1.0}, Interval{-1.0, 1.0}};
      form_.d2[0] = 1.0;
      form_.d2[1] = 1.0;
      form_.u = params.k * params.k;
      faces_ = {{0, -1.0}, {0, 1.0}, {1, -1.0}, {1, 1.0}};
      break;
  }
}

double Problem::source(double x0, double x1) const {
  if (kind_ != ProblemKind::Helmholtz) return 0.0;
  const double a1 = params_.a1 * kPi;
  const double a2 = params_.a2 * kPi;
  const double s = std::sin(a1 * x0) * std::sin(a2 * x1);
  const double k2 = params_.k * params_.k;
  const double q = params_.source == HelmholtzSource::Squared ? (-(a1 * a1) - (a2 * a2) + k2) * s
                                                              : (-a1 - a2 + k2) * s;
  return -q;
}

kernels::ChannelSpec Problem::residual_channels() const {
  kernels::ChannelSpec s = kernels::ChannelSpec::value_only(2);
  for (int k = 0; k < 2; ++k) {
    s.first[k] = form_.d1[k] != 0.0;
    s.second[k] = form_.d2[k] != 0.0;
  }
  return s.closed();
}

kernels::ChannelSpec Problem::initial_channels() const {
  kernels::ChannelSpec s = kernels::ChannelSpec::value_only(2);
  if (has_initial_velocity()) s.first[1] = true;
  return s;
}

double Problem::initial_value(double x) const { return exact(x, 0.0); }

Eigen::MatrixXd grid(const Problem& p, int n0, int n1) {
  if (n0 < 2 || n1 < 2) throw std::invalid_argument("evaluation grid needs at least 2 points per axis");
  const auto& dom = p.domain();
  Eigen::MatrixXd g(2, static_cast<Eigen::Index>(n0) * n1);
  Eigen::Index col = 0;
  for (int j = 0; j < n1; ++j) {
    const double x1 = dom[1].lo + dom[1].length() * j / (n1 - 1);
    for (int i = 0; i < n0; ++i) {
      g(0, col) = dom[0].lo + dom[0].length() * i / (n0 - 1);
      g(1, col) = x1;
      ++col;
    }
  }
  return g;
}

std::array<int, 2> default_eval_grid(ProblemKind k) {
  switch (k) {
    case ProblemKind::Heat: return {101, 101};
    case ProblemKind::Convection: return {256, 101};
    case ProblemKind::Wave: return {101, 251};
    case ProblemKind::Helmholtz: return {101, 101};
  }
  return {101, 101};
}

}  // namespace maskpinn::pde
