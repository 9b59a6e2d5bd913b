// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every line passes. Oracles here are written independently of the library
// code they judge: finite differences, hand-derived closed forms and direct
// property evaluation.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maskpinn/cli/commands.hpp"
#include "maskpinn/cli/config.hpp"
#include "maskpinn/cli/io.hpp"
#include "maskpinn/diagnostics/stats.hpp"
#include "maskpinn/diagnostics/sweep.hpp"
#include "maskpinn/kernels/engine.hpp"
#include "maskpinn/nn/mask.hpp"
#include "maskpinn/pde/sampling.hpp"
#include "maskpinn/train/loss.hpp"
#include "maskpinn/train/trainer.hpp"

using namespace maskpinn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr nn::Variant kVariants[] = {nn::Variant::Vanilla,   nn::Variant::ResNet,    nn::Variant::Mask,
                                     nn::Variant::BatchNorm, nn::Variant::LayerNorm, nn::Variant::Laaf};
constexpr nn::Activation kActivations[] = {nn::Activation::Tanh, nn::Activation::Gelu, nn::Activation::Silu,
                                           nn::Activation::Softplus};
const std::vector<std::uint64_t> kSeeds{0, 1, 2};

std::string sci(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << v;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int g_failed = 0;

void report(int id, const std::string& name, const Verdict& v, double secs) {
  if (!v.pass) ++g_failed;
  std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << v.detail << " (" << std::fixed
            << std::setprecision(1) << secs << " s)" << std::defaultfloat << std::endl;
}

void note(const std::string& line) { std::cout << "      " << line << std::endl; }

// 1. Engine derivatives against finite differences ---------------------------

nn::Model random_network(int index, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  nn::Architecture a;
  a.variant = kVariants[index % 6];
  a.activation = kActivations[(index / 6) % 4];
  a.width = std::array{3, 5, 8, 16}[static_cast<std::size_t>(index % 4)];
  a.depth = a.variant == nn::Variant::Mask ? 2 * (1 + index % 2) : 1 + index % 3;
  a.alpha_init = 0.9;
  nn::Model m = nn::make_model(a, 1000 + static_cast<std::uint64_t>(index));
  for (Eigen::Index i = 0; i < m.params.size(); ++i) m.params[i] += u(rng);
  std::uniform_real_distribution<double> mean(-0.3, 0.3);
  std::uniform_real_distribution<double> var(0.5, 2.0);
  for (std::size_t s = 0; s < m.norm.mean.size(); ++s) {
    for (Eigen::Index r = 0; r < m.norm.mean[s].size(); ++r) {
      m.norm.mean[s][r] = mean(rng);
      m.norm.var[s][r] = var(rng);
    }
  }
  return m;
}

double network_value(const nn::Model& m, double x0, double x1) {
  Eigen::MatrixXd p(2, 1);
  p << x0, x1;
  return kernels::evaluate(m, p, {})(0, 0);
}

/// Error relative to max(1, |reference|).
double rel_err(double got, double ref) { return std::abs(got - ref) / std::max(1.0, std::abs(ref)); }

/// Fourth-order central difference of g at 0, on a ladder of halving steps;
/// returns the estimate whose change from the next coarser step is smallest,
/// which guards against both truncation and cancellation error.
double ladder_fd(const std::function<double(double)>& g, int order, double h0) {
  auto stencil = [&](double h) {
    if (order == 1) return (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h);
    return (-g(2 * h) + 16 * g(h) - 30 * g(0) + 16 * g(-h) - g(-2 * h)) / (12 * h * h);
  };
  double prev = stencil(h0);
  double best = prev;
  double best_change = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 7; ++k) {
    const double cur = stencil(h0 / std::pow(2.0, k));
    const double change = std::abs(cur - prev);
    if (change < best_change) {
      best_change = change;
      best = cur;
    }
    prev = cur;
  }
  return best;
}

Verdict criterion_derivatives() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> coord(-0.9, 0.9);
  double worst1 = 0.0, worst2 = 0.0, worstp = 0.0;
  constexpr int kNetworks = 24;
  for (int n = 0; n < kNetworks; ++n) {
    nn::Model m = random_network(n, rng);
    // Input derivatives in eval mode, where every variant is a pointwise map.
    Eigen::MatrixXd pts(2, 6);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = coord(rng);
    kernels::ForwardRecord rec;
    kernels::forward(m, pts, kernels::ChannelSpec::full(2), kernels::Mode::Eval, {}, rec);
    const auto cs = rec.spec;
    const Eigen::MatrixXd& out = rec.output();
    const Eigen::Index np = pts.cols();
    for (Eigen::Index p = 0; p < np; ++p) {
      for (int k = 0; k < 2; ++k) {
        auto at = [&](double h) {
          double x[2] = {pts(0, p), pts(1, p)};
          x[k] += h;
          return network_value(m, x[0], x[1]);
        };
        const double fd1 = ladder_fd(at, 1, 1e-2);
        const double fd2 = ladder_fd(at, 2, 2e-2);
        worst1 = std::max(worst1, rel_err(out(0, cs.first_index(k) * np + p), fd1));
        worst2 = std::max(worst2, rel_err(out(0, cs.second_index(k) * np + p), fd2));
      }
    }
    // Parameter gradient of the composite loss in training mode.
    const pde::Problem problem(static_cast<pde::ProblemKind>(n % 4), {});
    const auto samples = pde::sample_points(problem, {8, 4, 3}, 500 + static_cast<std::uint64_t>(n));
    Eigen::VectorXd grad;
    (void)train::total_loss(m, problem, samples, {}, &grad);
    std::uniform_int_distribution<Eigen::Index> pick(0, m.params.size() - 1);
    for (int t = 0; t < 12; ++t) {
      const Eigen::Index i = pick(rng);
      auto at = [&](double h) {
        nn::Model q = m;
        q.params[i] += h;
        return train::total_loss(q, problem, samples, {}).total;
      };
      const double fd = ladder_fd(at, 1, 1e-3);
      worstp = std::max(worstp, rel_err(grad[i], fd));
    }
    if (std::getenv("MASKPINN_VERBOSE")) {
      const auto& a = m.net.architecture();
      note(std::string(nn::to_string(a.variant)) + " " + std::string(nn::to_string(a.activation)) + " " +
           std::to_string(a.depth) + "x" + std::to_string(a.width) + ": " + sci(worst1) + " " + sci(worst2) + " " +
           sci(worstp));
    }
  }
  Verdict v;
  v.pass = worst1 < 1e-6 && worst2 < 1e-5 && worstp < 1e-5;
  v.detail = std::to_string(kNetworks) + " networks; order1 " + sci(worst1) + " < 1e-6, order2 " + sci(worst2) +
             " < 1e-5, params " + sci(worstp) + " < 1e-5";
  return v;
}

// 2. Manufactured solutions -------------------------------------------------

/// Closed-form (u, u_0, u_1, u_00, u_11) of each exact solution.
std::array<double, 5> exact_derivatives(pde::ProblemKind k, const pde::ProblemParams& p, double x, double y) {
  switch (k) {
    case pde::ProblemKind::Heat: {
      const double s = std::sin(kPi * x), c = std::cos(kPi * x), e = std::exp(-kPi * kPi * y);
      return {s * e, kPi * c * e, -kPi * kPi * s * e, -kPi * kPi * s * e, std::pow(kPi, 4) * s * e};
    }
    case pde::ProblemKind::Convection: {
      const double s = std::sin(x - p.beta * y), c = std::cos(x - p.beta * y);
      return {s, c, -p.beta * c, -s, -p.beta * p.beta * s};
    }
    case pde::ProblemKind::Wave: {
      const double w = p.c * kPi;
      const double sx = std::sin(kPi * x), cx = std::cos(kPi * x), st = std::sin(w * y), ct = std::cos(w * y);
      return {sx * ct, kPi * cx * ct, -w * sx * st, -kPi * kPi * sx * ct, -w * w * sx * ct};
    }
    case pde::ProblemKind::Helmholtz: {
      const double ax = p.a1 * kPi, ay = p.a2 * kPi;
      const double sx = std::sin(ax * x), sy = std::sin(ay * y);
      return {sx * sy, ax * std::cos(ax * x) * sy, ay * sx * std::cos(ay * y), -ax * ax * sx * sy, -ay * ay * sx * sy};
    }
  }
  return {};
}

struct Gate {
  double residual = 0.0;
  double violation = 0.0;
  double derivative_mismatch = 0.0;
};

Gate gate(const pde::Problem& problem) {
  const auto s = pde::sample_points(problem, {100, 100, 100}, 31);
  auto field = [&](const ad::Jet<double>& a, const ad::Jet<double>& b) { return problem.exact(a, b); };
  Gate g;
  for (Eigen::Index i = 0; i < s.collocation.cols(); ++i) {
    const double x = s.collocation(0, i), y = s.collocation(1, i);
    const auto d = pde::field_derivatives(field, x, y);
    g.residual = std::max(g.residual, std::abs(problem.residual(d, x, y)));
    const auto ref = exact_derivatives(problem.kind(), problem.params(), x, y);
    const double got[5] = {d.u, d.d1[0], d.d1[1], d.d2[0], d.d2[1]};
    for (int c = 0; c < 5; ++c) g.derivative_mismatch = std::max(g.derivative_mismatch, rel_err(got[c], ref[c]));
  }
  for (Eigen::Index i = 0; i < s.initial.cols(); ++i) {
    const double x = s.initial(0, i);
    const auto ref = exact_derivatives(problem.kind(), problem.params(), x, 0.0);
    g.violation = std::max(g.violation, std::abs(ref[0] - s.initial_target[i]));
    if (problem.has_initial_velocity()) g.violation = std::max(g.violation, std::abs(ref[2]));
  }
  if (s.periodic) {
    const Eigen::Index m = s.pairs();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double lo = problem.exact(s.boundary(0, i), s.boundary(1, i));
      const double hi = problem.exact(s.boundary(0, m + i), s.boundary(1, m + i));
      g.violation = std::max(g.violation, std::abs(lo - hi));
    }
  } else {
    for (Eigen::Index i = 0; i < s.boundary.cols(); ++i) {
      const double u = problem.exact(s.boundary(0, i), s.boundary(1, i));
      g.violation = std::max(g.violation, std::abs(u - s.boundary_target[i]));
    }
  }
  return g;
}

Verdict criterion_manufactured() {
  Verdict v{true, ""};
  for (const auto k : {pde::ProblemKind::Heat, pde::ProblemKind::Convection, pde::ProblemKind::Wave,
                       pde::ProblemKind::Helmholtz}) {
    const Gate g = gate(pde::Problem(k, {}));
    const bool ok = g.residual < 1e-6 && g.violation < 1e-10 && g.derivative_mismatch < 1e-9;
    v.pass = v.pass && ok;
    v.detail += std::string(pde::to_string(k)) + " r=" + sci(g.residual) + " bc/ic=" + sci(g.violation) + "; ";
  }
  pde::ProblemParams printed;
  printed.source = pde::HelmholtzSource::AsPrinted;
  const Gate bad = gate(pde::Problem(pde::ProblemKind::Helmholtz, printed));
  v.pass = v.pass && bad.residual >= 1e-6;
  v.detail += "unsquared helmholtz source rejected with r=" + sci(bad.residual);
  return v;
}

// 3. Mask properties --------------------------------------------------------

Verdict criterion_mask_battery() {
  const auto t0 = Clock::now();
  constexpr int kSamples = 10000;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> zdist(-8.0, 8.0);
  std::uniform_real_distribution<double> adist(-3.0, 3.0);
  std::vector<double> z(kSamples), a(kSamples), neg(kSamples), zero(kSamples, 0.0);
  for (int i = 0; i < kSamples; ++i) {
    z[i] = zdist(rng);
    a[i] = adist(rng);
    neg[i] = -z[i];
  }
  const auto f = nn::mask_fn(z, a);
  const auto fneg = nn::mask_fn(neg, a);
  const auto f0 = nn::mask_fn(zero, a);
  int bad = 0;
  for (int i = 0; i < kSamples; ++i) {
    bad += f0[i] != 0.0;
    bad += f[i] != fneg[i];
    bad += !(f[i] >= 0.0 && f[i] <= 1.0);
    // Strictly below one wherever 1 - exp(-(az)^2) is representable as such.
    if (std::abs(a[i] * z[i]) < 6.0) bad += !(f[i] < 1.0);
    bad += std::abs(f[i] - (1.0 - std::exp(-a[i] * a[i] * z[i] * z[i]))) > 1e-15;
  }
  // Monotone in |z| for fixed alpha.
  std::vector<double> z2(kSamples);
  std::uniform_real_distribution<double> gap(1e-3, 1.0);
  for (int i = 0; i < kSamples; ++i) {
    z[i] = std::clamp(z[i], -4.0, 4.0);
    a[i] = std::copysign(std::clamp(std::abs(a[i]), 0.1, 1.2), a[i]);
    z2[i] = std::copysign(std::abs(z[i]) + gap(rng), i % 2 ? 1.0 : -1.0);
  }
  const auto g1 = nn::mask_fn(z, a);
  const auto g2 = nn::mask_fn(z2, a);
  for (int i = 0; i < kSamples; ++i) bad += !(g1[i] < g2[i]);
  // Gated output never exceeds the plain activation in magnitude.
  for (int i = 0; i < kSamples; ++i) {
    const auto act = kActivations[i % 4];
    const double s = nn::activate(act, z[i]);
    bad += std::abs(nn::masked_derivs(act, z[i], a[i]).f0) > std::abs(s) + 1e-15;
  }
  // alpha = 0 closes both gates, leaving the block an exact identity.
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    nn::MaskBlock b;
    const int width = 8;
    b.w1 = Eigen::MatrixXd::NullaryExpr(width, width, [&] { return w(rng); });
    b.w2 = Eigen::MatrixXd::NullaryExpr(width, width, [&] { return w(rng); });
    b.b1 = Eigen::VectorXd::NullaryExpr(width, [&] { return w(rng); });
    b.b2 = Eigen::VectorXd::NullaryExpr(width, [&] { return w(rng); });
    b.alpha1 = Eigen::VectorXd::Zero(width);
    b.alpha2 = Eigen::VectorXd::Zero(width);
    const Eigen::VectorXd h = Eigen::VectorXd::NullaryExpr(width, [&] { return 3.0 * w(rng); });
    bad += !(nn::mask_block_forward(b, h, kActivations[i % 4]).array() == h.array()).all();
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = bad == 0 && secs < 1.0;
  v.detail = std::to_string(bad) + " violations over " + std::to_string(kSamples) + " samples in " + sci(secs) +
             " s (< 1 s)";
  return v;
}

// Training helpers ----------------------------------------------------------

struct Runs {
  std::vector<train::TrainResult> results;
  [[nodiscard]] std::vector<double> finals() const {
    std::vector<double> f;
    for (const auto& r : results) f.push_back(r.final_rel_l2());
    return f;
  }
};

Runs train_seeds(const cli::ExperimentConfig& base, const std::string& label) {
  Runs runs;
  const pde::Problem problem(base.problem, base.problem_params);
  for (const auto seed : kSeeds) {
    train::TrainConfig cfg = base.training;
    cfg.seed = seed;
    const auto t0 = Clock::now();
    runs.results.push_back(train::train(problem, base.arch, cfg));
    const auto& r = runs.results.back();
    note(label + " seed " + std::to_string(seed) + ": final rel L2 " + sci(r.final_rel_l2()) +
         (r.status == train::RunStatus::Diverged ? " (diverged at " + std::to_string(r.diverged_at) + ")" : "") +
         ", " + sci(seconds_since(t0)) + " s");
  }
  return runs;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

const train::MetricsRow& row_at(const train::MetricsLog& log, int iter) {
  for (const auto& r : log.rows) {
    if (r.iter == iter) return r;
  }
  throw std::runtime_error("no metrics row at iteration " + std::to_string(iter));
}

cli::ExperimentConfig shipped(const std::string& relative) {
  return cli::load_config(std::string(MASKPINN_SOURCE_DIR) + "/configs/" + relative);
}

// 4. Heat accuracy ----------------------------------------------------------

Verdict criterion_heat() {
  const fs::path out = fs::temp_directory_path() / "maskpinn_acceptance_heat";
  fs::remove_all(out);
  cli::ExperimentConfig mask = shipped("heat_mask_desk.toml");
  mask.trials = kSeeds;
  std::ostringstream log;
  const auto report = cli::run_experiment(mask, "heat_mask_desk.toml", out, log);
  std::vector<double> mask_err;
  bool rows_ok = true;
  const std::size_t want_rows = static_cast<std::size_t>(mask.training.iterations / mask.training.log_every + 1);
  for (const auto& t : report.manifest.trials) {
    const auto table = cli::read_csv(report.dir / ("trial_" + std::to_string(t.seed)) / "metrics.csv");
    rows_ok = rows_ok && table.rows.size() == want_rows;
    mask_err.push_back(table.number(table.rows.size() - 1, table.column("rel_l2")));
    note("mask seed " + std::to_string(t.seed) + ": " + t.status + " final rel L2 " + sci(mask_err.back()));
  }
  fs::remove_all(out);

  cli::ExperimentConfig vanilla = mask;
  vanilla.arch.variant = nn::Variant::Vanilla;
  vanilla.arch.depth = 4;
  const auto van = train_seeds(vanilla, "vanilla 4x64");
  const double m = mean_of(mask_err);
  const double v = mean_of(van.finals());
  Verdict res;
  res.pass = rows_ok && report.exit_code == cli::kOk && m < 1e-2 && v < 1e-2;
  res.detail = "mask 2x64 mean " + sci(m) + ", vanilla 4x64 mean " + sci(v) + " (both < 1e-2); metrics rows " +
               (rows_ok ? "= iterations/log_every + 1" : "WRONG");
  return res;
}

// 5. Normalization on heat --------------------------------------------------

cli::ExperimentConfig heat_norm_config() {
  cli::ExperimentConfig c = shipped("desk/heat/vanilla_tanh.toml");
  c.arch.depth = 4;
  c.training.iterations = 3000;
  c.training.counts = {512, 128, 128};
  c.training.log_every = 100;
  c.training.capture_preact = false;
  return c;
}

Verdict criterion_normalization() {
  cli::ExperimentConfig c = heat_norm_config();
  c.arch.variant = nn::Variant::BatchNorm;
  const auto bn = train_seeds(c, "batchnorm");
  c.arch.variant = nn::Variant::LayerNorm;
  const auto ln = train_seeds(c, "layernorm");
  c.arch.variant = nn::Variant::Vanilla;
  const auto van = train_seeds(c, "vanilla");
  int bn_hits = 0, ln_hits = 0;
  std::ostringstream d;
  for (std::size_t s = 0; s < kSeeds.size(); ++s) {
    const auto& b = bn.results[s];
    if (b.status == train::RunStatus::Converged) {
      const auto& r100 = row_at(b.metrics, 100);
      const auto& last = b.metrics.rows.back();
      const double drop = r100.loss_total / last.loss_total;
      const double improve = (r100.rel_l2 - last.rel_l2) / r100.rel_l2;
      bn_hits += drop >= 10.0 && improve < 0.2;
      d << "bn s" << kSeeds[s] << " loss/" << sci(drop) << " rel-improve " << sci(improve) << "; ";
    }
    const auto& l = ln.results[s];
    const bool ln_converged = l.status == train::RunStatus::Converged &&
                              l.metrics.rows.back().rel_l2 < l.metrics.rows.front().rel_l2 &&
                              l.metrics.rows.back().loss_total < l.metrics.rows.front().loss_total;
    const bool ln_worse = l.final_rel_l2() > van.results[s].final_rel_l2();
    ln_hits += ln_converged && ln_worse;
    d << "ln s" << kSeeds[s] << ' ' << sci(l.final_rel_l2()) << " vs vanilla " << sci(van.results[s].final_rel_l2())
      << "; ";
  }
  const int majority = static_cast<int>(kSeeds.size()) / 2 + 1;
  Verdict v;
  v.pass = bn_hits >= majority && ln_hits >= majority;
  v.detail = "bn pattern " + std::to_string(bn_hits) + "/3, ln pattern " + std::to_string(ln_hits) + "/3 (need " +
             std::to_string(majority) + ")";
  note(d.str());
  return v;
}

// 6. Convection with softplus -----------------------------------------------

Verdict criterion_convection() {
  cli::ExperimentConfig c = shipped("desk/convection/vanilla_softplus.toml");
  c.training.capture_preact = false;
  const auto van = train_seeds(c, "vanilla 3x128");
  c = shipped("desk/convection/mask_softplus.toml");
  c.training.capture_preact = false;
  const auto mask = train_seeds(c, "mask 1 block x128");
  const double v = mean_of(van.finals());
  const double m = mean_of(mask.finals());
  Verdict res;
  res.pass = std::isfinite(m) && std::isfinite(v) && 5.0 * m <= v;
  res.detail = "beta=" + sci(c.problem_params.beta) + ", mask mean " + sci(m) + ", vanilla mean " + sci(v) +
               ", ratio " + sci(v / m) + " (>= 5)";
  return res;
}

// 7. Variance drift on the wave equation ------------------------------------

Verdict criterion_variance() {
  cli::ExperimentConfig c = shipped("desk/wave/vanilla_tanh.toml");
  const auto van = train_seeds(c, "wave vanilla");
  c = shipped("desk/wave/mask_tanh.toml");
  const auto mask = train_seeds(c, "wave mask");
  int hits = 0;
  std::ostringstream d;
  for (std::size_t s = 0; s < kSeeds.size(); ++s) {
    const auto mt = diag::max_variance_trace(mask.results[s].preact);
    const auto vt = diag::max_variance_trace(van.results[s].preact);
    if (mt.max_var.size() < 8 || vt.max_var.empty()) continue;
    const bool lower = mt.max_var.back() < vt.max_var.back();
    const std::size_t q = mt.iter.size() - mt.iter.size() / 4;
    std::vector<double> x, y;
    for (std::size_t i = q; i < mt.iter.size(); ++i) {
      x.push_back(mt.iter[i]);
      y.push_back(mt.max_var[i]);
    }
    const auto trend = diag::linear_trend(x, y);
    const bool flat = trend.slope <= 2.0 * trend.stderr_slope;
    hits += lower && flat;
    d << "s" << kSeeds[s] << " var mask " << sci(mt.max_var.back()) << " vanilla " << sci(vt.max_var.back())
      << " slope " << sci(trend.slope) << "+-" << sci(trend.stderr_slope) << "; ";
  }
  note(d.str());
  Verdict v;
  v.pass = hits >= 2;
  v.detail = std::to_string(hits) + "/3 seeds with lower final variance and non-rising last quartile";
  return v;
}

// 8. Width sweep ------------------------------------------------------------

Verdict criterion_width_sweep() {
  const std::vector<int> widths{16, 64, 256, 1024};
  const std::vector<std::uint64_t> seeds{0, 1};
  const pde::Problem problem(pde::ProblemKind::Convection, {});
  train::TrainConfig cfg;
  cfg.iterations = 500;
  cfg.counts = {128, 64, 64};
  cfg.log_every = 250;
  cfg.probe_size = 64;
  cfg.capture_preact = false;
  cfg.record_time = false;
  int mask_ok = 0, vanilla_rise = 0;
  std::ostringstream d;
  for (const auto act : kActivations) {
    for (const auto variant : {nn::Variant::Mask, nn::Variant::Vanilla}) {
      nn::Architecture arch;
      arch.variant = variant;
      arch.activation = act;
      arch.depth = diag::parity_depth(variant, 3);
      const auto r = diag::width_sweep(problem, arch, widths, seeds, cfg);
      const auto means = diag::mean_errors(r);
      d << nn::to_string(variant) << '/' << nn::to_string(act) << ':';
      for (const double m : means) d << ' ' << sci(m);
      note(d.str());
      d.str("");
      if (variant == nn::Variant::Mask) {
        mask_ok += diag::non_increasing(means);
      } else {
        // A diverged widest cell counts as an increase.
        std::size_t best = 0;
        for (std::size_t i = 1; i < means.size(); ++i) {
          if (std::isfinite(means[i]) && (!std::isfinite(means[best]) || means[i] < means[best])) best = i;
        }
        const double last = means.back();
        vanilla_rise += best + 1 < means.size() && (!std::isfinite(last) || last > means[best]);
      }
    }
  }
  Verdict v;
  v.pass = mask_ok >= 3 && vanilla_rise >= 2;
  v.detail = "mask non-increasing for " + std::to_string(mask_ok) + "/4 (need 3), vanilla rises to width 1024 for " +
             std::to_string(vanilla_rise) + "/4 (need 2)";
  return v;
}

// 9. Determinism ------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MASKPINN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "maskpinn_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  int identical = 0, total = 0;
  for (const char* name : {"desk/heat/mask_tanh.toml", "desk/convection/batchnorm_gelu.toml",
                           "desk/wave/layernorm_silu.toml", "desk/helmholtz/laaf_softplus.toml"}) {
    cli::ExperimentConfig c = shipped(name);
    c.training.iterations = 150;
    c.training.log_every = 25;
    c.training.record_time = false;
    c.trials = {7};
    const fs::path cfg_path = root / (std::to_string(total) + ".toml");
    std::ofstream(cfg_path) << cli::serialize(c);
    const fs::path a = root / ("a" + std::to_string(total));
    const fs::path b = root / ("b" + std::to_string(total));
    const bool ran = run_cli("run --config " + cfg_path.string() + " --out " + a.string()) == 0 &&
                     run_cli("run --config " + cfg_path.string() + " --out " + b.string()) == 0;
    const std::string ma = slurp(a / "trial_7" / "metrics.csv");
    identical += ran && !ma.empty() && ma == slurp(b / "trial_7" / "metrics.csv");
    ++total;
  }
  fs::remove_all(root);
  Verdict v;
  v.pass = identical == total;
  v.detail = std::to_string(identical) + "/" + std::to_string(total) + " repeated runs byte-identical";
  return v;
}

// 10. Oracle suite ----------------------------------------------------------

Verdict criterion_check() {
  const auto t0 = Clock::now();
  const int code = run_cli("check");
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = code == 0 && secs < 60.0;
  v.detail = "exit " + std::to_string(code) + " in " + sci(secs) + " s (< 60 s)";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  struct Item {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Item> items{
      {1, "engine derivatives match finite differences", criterion_derivatives},
      {2, "manufactured solutions zero the residuals", criterion_manufactured},
      {3, "mask property battery", criterion_mask_battery},
      {4, "heat accuracy", criterion_heat},
      {5, "normalization on heat", criterion_normalization},
      {6, "convection with softplus", criterion_convection},
      {7, "variance drift on the wave equation", criterion_variance},
      {8, "width sweep on convection", criterion_width_sweep},
      {9, "bit-identical reruns", criterion_determinism},
      {10, "oracle suite", criterion_check},
  };
  // Optional arguments select criteria by number.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const auto start = Clock::now();
  for (const auto& item : items) {
    if (!only.empty() && std::find(only.begin(), only.end(), item.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = item.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    report(item.id, item.name, v, seconds_since(t0));
  }
  std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << " in "
            << std::fixed << std::setprecision(0) << seconds_since(start) << " s" << std::endl;
  return g_failed == 0 ? 0 : 1;
}
