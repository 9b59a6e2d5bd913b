#include "maskpinn/cli/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <ostream>
#include <stdexcept>

#include "maskpinn/autodiff/gradcheck.hpp"
#include "maskpinn/kernels/engine.hpp"
#include "maskpinn/nn/mask.hpp"
#include "maskpinn/nn/network.hpp"
#include "maskpinn/pde/sampling.hpp"
#include "maskpinn/rng.hpp"
#include "maskpinn/train/loss.hpp"

namespace maskpinn::cli {

namespace {

constexpr nn::Variant kVariants[] = {nn::Variant::Vanilla,   nn::Variant::ResNet,    nn::Variant::Mask,
                                     nn::Variant::BatchNorm, nn::Variant::LayerNorm, nn::Variant::Laaf};
constexpr nn::Activation kActivations[] = {nn::Activation::Tanh, nn::Activation::Gelu, nn::Activation::Silu,
                                           nn::Activation::Softplus};
constexpr pde::ProblemKind kProblems[] = {pde::ProblemKind::Heat, pde::ProblemKind::Convection,
                                          pde::ProblemKind::Wave, pde::ProblemKind::Helmholtz};

/// Random network number `index`: every variant and activation in turn,
/// widths <= 16, parameters and running statistics moved off their
/// initial values.
nn::Model random_model(int index, std::uint64_t seed) {
  Rng rng(seed, 100 + static_cast<std::uint64_t>(index));
  nn::Architecture a;
  a.variant = kVariants[index % 6];
  a.activation = kActivations[(index / 6) % 4];
  a.width = std::array{4, 8, 16}[static_cast<std::size_t>(index % 3)];
  a.depth = a.variant == nn::Variant::Mask ? 2 : 2 + index % 2;
  a.alpha_init = 0.8;
  nn::Model m = nn::make_model(a, seed + static_cast<std::uint64_t>(index));
  for (Eigen::Index i = 0; i < m.params.size(); ++i) m.params[i] += rng.uniform(-0.2, 0.2);
  for (std::size_t s = 0; s < m.norm.mean.size(); ++s) {
    for (Eigen::Index r = 0; r < m.norm.mean[s].size(); ++r) {
      m.norm.mean[s][r] = rng.uniform(-0.3, 0.3);
      m.norm.var[s][r] = rng.uniform(0.5, 2.0);
    }
  }
  return m;
}

Eigen::MatrixXd random_points(Rng& rng, int n) {
  Eigen::MatrixXd p(2, n);
  for (int j = 0; j < n; ++j) {
    p(0, j) = rng.uniform(0.05, 0.95);
    p(1, j) = rng.uniform(0.05, 0.95);
  }
  return p;
}

/// Fourth-order central stencils.
double fd_first(const std::function<double(double)>& f, double h) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}
double fd_second(const std::function<double(double)>& f, double h) {
  return (-f(2 * h) + 16 * f(h) - 30 * f(0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
}

/// Worst relative error of order-1 and order-2 input derivatives over all
/// random networks.
std::pair<double, double> input_derivative_errors(const CheckOptions& opts) {
  double worst1 = 0.0;
  double worst2 = 0.0;
  const kernels::ExecPolicy pol;
  for (int k = 0; k < opts.networks; ++k) {
    const nn::Model m = random_model(k, opts.seed);
    Rng rng(opts.seed, 200 + static_cast<std::uint64_t>(k));
    const int n = 8;
    const Eigen::MatrixXd pts = random_points(rng, n);
    const kernels::ChannelSpec spec = kernels::ChannelSpec::full(2);
    kernels::ForwardRecord rec;
    rec.keep_pointwise = false;
    kernels::forward(m, pts, spec, kernels::Mode::Eval, pol, rec);
    const Eigen::MatrixXd& out = rec.output();

    std::vector<double> a1, r1, a2, r2;
    for (int p = 0; p < n; ++p) {
      for (int dir = 0; dir < 2; ++dir) {
        auto f = [&](double h) {
          Eigen::MatrixXd q = pts.col(p);
          q(dir, 0) += h;
          return kernels::evaluate(m, q, pol)(0, 0);
        };
        a1.push_back(out(0, spec.first_index(dir) * n + p));
        r1.push_back(fd_first(f, 1e-3));
        a2.push_back(out(0, spec.second_index(dir) * n + p));
        r2.push_back(fd_second(f, 4e-3));
      }
    }
    worst1 = std::max(worst1, ad::compare_derivatives(a1, r1, 1).max_rel_error);
    worst2 = std::max(worst2, ad::compare_derivatives(a2, r2, 2).max_rel_error);
  }
  return {worst1, worst2};
}

double parameter_gradient_error(const CheckOptions& opts) {
  double worst = 0.0;
  for (int k = 0; k < opts.networks; ++k) {
    nn::Model m = random_model(k, opts.seed);
    const pde::Problem problem(kProblems[k % 4], {});
    const pde::SampleSet s = pde::sample_points(problem, {8, 4, 4}, opts.seed + static_cast<std::uint64_t>(k));
    const train::LossWeights w{1.0, 1.0, 1.0};
    Eigen::VectorXd grad;
    (void)train::total_loss(m, problem, s, w, &grad);
    std::vector<double> analytic(grad.data(), grad.data() + grad.size());
    std::vector<double> reference(analytic.size());
    train::LossEvaluator ev(problem, s, w);
    for (Eigen::Index i = 0; i < m.params.size(); ++i) {
      const double base = m.params[i];
      auto f = [&](double h) {
        m.params[i] = base + h;
        return ev.evaluate(m, nullptr).total;
      };
      reference[static_cast<std::size_t>(i)] = fd_first(f, 1e-4);
      m.params[i] = base;
    }
    worst = std::max(worst, ad::compare_derivatives(analytic, reference, 1).max_rel_error);
  }
  return worst;
}

CheckResult mask_battery(const std::string& name, const CheckOptions& opts) {
  Rng rng(opts.seed, 300);
  const int n = opts.mask_samples;
  auto F = [](double z, double a) { return nn::mask_gate(z, a); };
  CheckResult r{name, true, 0.0, 0.0, ""};
  int failures = 0;
  if (name == "mask.zero") {
    for (int i = 0; i < n; ++i) failures += F(0.0, rng.uniform(-5.0, 5.0)) != 0.0;
  } else if (name == "mask.even") {
    for (int i = 0; i < n; ++i) {
      const double z = rng.uniform(-10.0, 10.0);
      const double a = rng.uniform(-5.0, 5.0);
      failures += F(z, a) != F(-z, a);
    }
  } else if (name == "mask.range") {
    // |alpha z| <= 6 keeps exp(-(alpha z)^2) above half an ulp of 1, so the
    // strict upper bound is representable.
    for (int i = 0; i < n; ++i) {
      const double z = rng.uniform(-4.0, 4.0);
      const double a = rng.uniform(-1.5, 1.5);
      const double v = F(z, a);
      failures += !(v >= 0.0 && v < 1.0);
    }
  } else if (name == "mask.monotone") {
    for (int i = 0; i < n; ++i) {
      const double a = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
      const double z1 = rng.uniform(-4.0, 4.0);
      const double mag = std::abs(z1) + rng.uniform(0.01, 1.0);
      const double z2 = rng.uniform() < 0.5 ? -mag : mag;
      failures += !(F(z1, a) < F(z2, a));
    }
  } else if (name == "mask.composite") {
    for (int i = 0; i < n; ++i) {
      const double z = rng.uniform(-20.0, 20.0);
      const double a = rng.uniform(-5.0, 5.0);
      const nn::Activation act = kActivations[i % 4];
      const double s = nn::activate(act, z);
      failures += !(std::abs(F(z, a) * s) <= std::abs(s));
    }
  } else if (name == "mask.block_identity") {
    const Eigen::Index w = 8;
    for (int i = 0; i < n; ++i) {
      nn::MaskBlock b;
      b.w1 = Eigen::MatrixXd::NullaryExpr(w, w, [&] { return rng.uniform(-1.0, 1.0); });
      b.w2 = Eigen::MatrixXd::NullaryExpr(w, w, [&] { return rng.uniform(-1.0, 1.0); });
      b.b1 = Eigen::VectorXd::NullaryExpr(w, [&] { return rng.uniform(-1.0, 1.0); });
      b.b2 = Eigen::VectorXd::NullaryExpr(w, [&] { return rng.uniform(-1.0, 1.0); });
      b.alpha1 = Eigen::VectorXd::Zero(w);
      b.alpha2 = Eigen::VectorXd::Zero(w);
      const Eigen::VectorXd h = Eigen::VectorXd::NullaryExpr(w, [&] { return rng.uniform(-3.0, 3.0); });
      const Eigen::VectorXd out = nn::mask_block_forward(b, h, kActivations[i % 4]);
      failures += !(out.array() == h.array()).all();
    }
  }
  r.measured = failures;
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + " of " + std::to_string(n) + " samples violate the property";
  return r;
}

struct Entry {
  std::string name;
  std::function<std::vector<CheckResult>(const CheckOptions&)> run;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << v;
  return s.str();
}

CheckResult threshold(const std::string& name, double measured, double limit) {
  return {name, measured < limit, measured, limit, "max " + fmt(measured) + " (limit " + fmt(limit) + ")"};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"autodiff.input", [](const CheckOptions& o) {
                   const auto [e1, e2] = input_derivative_errors(o);
                   return std::vector{threshold("autodiff.input.order1", e1, 1e-6),
                                      threshold("autodiff.input.order2", e2, 1e-5)};
                 }});
    e.push_back({"autodiff.params", [](const CheckOptions& o) {
                   return std::vector{threshold("autodiff.params", parameter_gradient_error(o), 1e-5)};
                 }});
    for (const auto kind : kProblems) {
      const std::string base = "manufactured." + std::string(pde::to_string(kind));
      e.push_back({base, [kind, base](const CheckOptions& o) {
                     const GateReport g = manufactured_gate(pde::Problem(kind, {}), o.points, o.seed);
                     return std::vector{threshold(base + ".residual", g.max_residual, 1e-6),
                                        threshold(base + ".conditions", g.max_violation, 1e-10)};
                   }});
    }
    e.push_back({"manufactured.helmholtz_as_printed", [](const CheckOptions& o) {
                   pde::ProblemParams p;
                   p.source = pde::HelmholtzSource::AsPrinted;
                   const GateReport g = manufactured_gate(pde::Problem(pde::ProblemKind::Helmholtz, p), o.points, o.seed);
                   CheckResult r{"manufactured.helmholtz_as_printed.rejected", g.max_residual >= 1e-6, g.max_residual,
                                 1e-6, "unsquared source leaves residual " + fmt(g.max_residual) + " (must be >= 1e-6)"};
                   return std::vector{r};
                 }});
    for (const char* m : {"mask.zero", "mask.even", "mask.range", "mask.monotone", "mask.composite",
                          "mask.block_identity"}) {
      e.push_back({m, [name = std::string(m)](const CheckOptions& o) { return std::vector{mask_battery(name, o)}; }});
    }
    return e;
  }();
  return entries;
}

}  // namespace

GateReport manufactured_gate(const pde::Problem& problem, int points, std::uint64_t seed) {
  const pde::SampleSet s = pde::sample_points(problem, {points, points, points}, seed);
  auto field = [&](const ad::Jet<double>& a, const ad::Jet<double>& b) { return problem.exact(a, b); };
  GateReport g;
  for (Eigen::Index p = 0; p < s.collocation.cols(); ++p) {
    const double x0 = s.collocation(0, p);
    const double x1 = s.collocation(1, p);
    const auto d = pde::field_derivatives(field, x0, x1);
    g.max_residual = std::max(g.max_residual, std::abs(problem.residual(d, x0, x1)));
  }
  for (Eigen::Index p = 0; p < s.initial.cols(); ++p) {
    const double x = s.initial(0, p);
    const auto d = pde::field_derivatives(field, x, 0.0);
    g.max_violation = std::max(g.max_violation, std::abs(d.u - problem.initial_value(x)));
    if (problem.has_initial_velocity()) g.max_violation = std::max(g.max_violation, std::abs(d.d1[1]));
  }
  if (s.periodic) {
    const Eigen::Index m = s.pairs();
    for (Eigen::Index p = 0; p < m; ++p) {
      const double lo = problem.exact(s.boundary(0, p), s.boundary(1, p));
      const double hi = problem.exact(s.boundary(0, m + p), s.boundary(1, m + p));
      g.max_violation = std::max(g.max_violation, std::abs(lo - hi));
    }
  } else {
    for (Eigen::Index p = 0; p < s.boundary.cols(); ++p) {
      const double u = problem.exact(s.boundary(0, p), s.boundary(1, p));
      g.max_violation = std::max(g.max_violation, std::abs(u - s.boundary_target[p]));
    }
  }
  return g;
}

std::vector<std::string> check_names() {
  std::vector<std::string> names;
  for (const auto& e : registry()) names.push_back(e.name);
  return names;
}

std::vector<CheckResult> run_checks(const std::string& filter, const CheckOptions& opts) {
  std::vector<CheckResult> out;
  bool matched = false;
  for (const auto& e : registry()) {
    if (!filter.empty() && e.name.find(filter) == std::string::npos) continue;
    matched = true;
    for (auto& r : e.run(opts)) out.push_back(std::move(r));
  }
  if (!matched) throw std::invalid_argument("no check matches '" + filter + "'");
  return out;
}

int report_checks(const std::vector<CheckResult>& results, std::ostream& out) {
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 2;
}

}  // namespace maskpinn::cli
