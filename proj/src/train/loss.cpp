#include "maskpinn/train/loss.hpp"

#include <cmath>
#include <string>

#include "maskpinn/autodiff/jet.hpp"
#include "maskpinn/autodiff/tape.hpp"
#include "maskpinn/nn/reference.hpp"

namespace maskpinn::train {

namespace {

void require_finite(double v, const char* component) {
  if (!std::isfinite(v)) throw ad::NonFiniteError(std::string(component) + " is not finite");
}

void add_backward(const nn::Model& model, const kernels::ForwardRecord& rec, const Eigen::MatrixXd& adjoint,
                  Eigen::VectorXd* grad, const kernels::ExecPolicy& policy) {
  if (grad != nullptr) kernels::backward(model, rec, adjoint, *grad, policy);
}

}  // namespace

LossEvaluator::LossEvaluator(const pde::Problem& problem, const pde::SampleSet& samples, const LossWeights& weights,
                             const kernels::ExecPolicy& policy)
    : problem_(problem),
      samples_(samples),
      weights_(weights),
      policy_(policy),
      residual_spec_(problem.residual_channels()),
      initial_spec_(problem.initial_channels()) {
  const Eigen::Index n = samples.collocation.cols();
  source_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index p = 0; p < n; ++p) {
    source_[static_cast<std::size_t>(p)] = problem.source(samples.collocation(0, p), samples.collocation(1, p));
  }
}

LossComponents LossEvaluator::evaluate(const nn::Model& model, Eigen::VectorXd* grad, nn::NormState* running) {
  using kernels::Mode;
  if (grad != nullptr) grad->setZero(static_cast<Eigen::Index>(model.net.parameter_count()));
  LossComponents c;

  // Interior residual.
  {
    const Eigen::Index n = samples_.collocation.cols();
    kernels::forward(model, samples_.collocation, residual_spec_, Mode::Train, policy_, rec_r_, running);
    const Eigen::MatrixXd& out = rec_r_.output();
    const pde::ResidualForm& form = problem_.form();
    std::vector<std::pair<int, double>> terms{{0, form.u}};
    for (int k = 0; k < 2; ++k) {
      if (form.d1[k] != 0.0) terms.emplace_back(residual_spec_.first_index(k), form.d1[k]);
      if (form.d2[k] != 0.0) terms.emplace_back(residual_spec_.second_index(k), form.d2[k]);
    }
    const bool backprop = grad != nullptr && weights_.r != 0.0;
    if (backprop) adjoint_.setZero(1, out.cols());
    double sum = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      double r = source_[static_cast<std::size_t>(p)];
      for (const auto& [ch, coef] : terms) r += coef * out(0, ch * n + p);
      sum += r * r;
      if (backprop) {
        const double g = 2.0 * weights_.r * r / static_cast<double>(n);
        for (const auto& [ch, coef] : terms) adjoint_(0, ch * n + p) += coef * g;
      }
    }
    c.r = sum / static_cast<double>(n);
    require_finite(c.r, "loss_r");
    if (backprop) add_backward(model, rec_r_, adjoint_, grad, policy_);
  }

  // Initial condition: value mismatch, plus mean squared u_t for the wave.
  if (problem_.has_time()) {
    const Eigen::Index n = samples_.initial.cols();
    kernels::forward(model, samples_.initial, initial_spec_, Mode::Train, policy_, rec_ic_);
    const Eigen::MatrixXd& out = rec_ic_.output();
    const int vel = initial_spec_.first_index(1);
    const bool backprop = grad != nullptr && weights_.ic != 0.0;
    if (backprop) adjoint_.setZero(1, out.cols());
    double sum_u = 0.0;
    double sum_v = 0.0;
    const double scale = 2.0 * weights_.ic / static_cast<double>(n);
    for (Eigen::Index p = 0; p < n; ++p) {
      const double e = out(0, p) - samples_.initial_target[p];
      sum_u += e * e;
      if (backprop) adjoint_(0, p) = scale * e;
      if (vel >= 0) {
        const double v = out(0, vel * n + p);
        sum_v += v * v;
        if (backprop) adjoint_(0, vel * n + p) = scale * v;
      }
    }
    c.ic = (sum_u + sum_v) / static_cast<double>(n);
    require_finite(c.ic, "loss_ic");
    if (backprop) add_backward(model, rec_ic_, adjoint_, grad, policy_);
  }

  // Boundary: Dirichlet zeros or periodic pair mismatch.
  {
    kernels::forward(model, samples_.boundary, kernels::ChannelSpec::value_only(2), Mode::Train, policy_, rec_bc_);
    const Eigen::MatrixXd& out = rec_bc_.output();
    const bool backprop = grad != nullptr && weights_.bc != 0.0;
    if (backprop) adjoint_.setZero(1, out.cols());
    double sum = 0.0;
    if (samples_.periodic) {
      const Eigen::Index m = samples_.pairs();
      const double scale = 2.0 * weights_.bc / static_cast<double>(m);
      for (Eigen::Index p = 0; p < m; ++p) {
        const double e = out(0, p) - out(0, m + p);
        sum += e * e;
        if (backprop) {
          adjoint_(0, p) = scale * e;
          adjoint_(0, m + p) = -scale * e;
        }
      }
      c.bc = sum / static_cast<double>(m);
    } else {
      const Eigen::Index m = out.cols();
      const double scale = 2.0 * weights_.bc / static_cast<double>(m);
      for (Eigen::Index p = 0; p < m; ++p) {
        const double e = out(0, p) - samples_.boundary_target[p];
        sum += e * e;
        if (backprop) adjoint_(0, p) = scale * e;
      }
      c.bc = sum / static_cast<double>(m);
    }
    require_finite(c.bc, "loss_bc");
    if (backprop) add_backward(model, rec_bc_, adjoint_, grad, policy_);
  }

  c.total = weights_.ic * c.ic + weights_.bc * c.bc + weights_.r * c.r;
  require_finite(c.total, "loss_total");
  return c;
}

LossComponents total_loss(const nn::Model& model, const pde::Problem& problem, const pde::SampleSet& samples,
                          const LossWeights& weights, Eigen::VectorXd* grad, const kernels::ExecPolicy& policy) {
  LossEvaluator ev(problem, samples, weights, policy);
  return ev.evaluate(model, grad);
}

namespace {

using JV = ad::Jet<ad::Var>;

/// Local derivatives of the network output at every column of `points`, one
/// reference jet pass per direction enabled in `spec`.
std::vector<pde::LocalDerivs<ad::Var>> reference_fields(const nn::Network& net, std::span<const ad::Var> params,
                                                        const Eigen::MatrixXd& points,
                                                        const kernels::ChannelSpec& spec) {
  const auto n = static_cast<std::size_t>(points.cols());
  const auto d = static_cast<std::size_t>(points.rows());
  const nn::NormState unused;
  std::vector<pde::LocalDerivs<ad::Var>> fields(n);
  auto pass = [&](int direction) {
    std::vector<std::vector<JV>> inputs(n, std::vector<JV>(d));
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t j = 0; j < d; ++j) {
        const ad::Var x(points(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(p)));
        inputs[p][j] = static_cast<int>(j) == direction ? JV::seeded(x) : JV(x);
      }
    }
    return nn::reference_forward<JV, ad::Var>(net, params, inputs, kernels::Mode::Train, unused);
  };
  bool any = false;
  for (int k = 0; k < 2; ++k) {
    if (!spec.first[static_cast<std::size_t>(k)] && !spec.second[static_cast<std::size_t>(k)]) continue;
    any = true;
    const auto out = pass(k);
    for (std::size_t p = 0; p < n; ++p) {
      fields[p].u = out[p][0].value;
      fields[p].d1[static_cast<std::size_t>(k)] = out[p][0].d1;
      fields[p].d2[static_cast<std::size_t>(k)] = out[p][0].d2;
    }
  }
  if (!any) {
    const auto out = pass(-1);
    for (std::size_t p = 0; p < n; ++p) fields[p].u = out[p][0].value;
  }
  return fields;
}

}  // namespace

LossComponents reference_loss(const nn::Model& model, const pde::Problem& problem, const pde::SampleSet& samples,
                              const LossWeights& weights, std::vector<double>* grad) {
  ad::Tape tape;
  std::vector<ad::Var> params;
  params.reserve(static_cast<std::size_t>(model.params.size()));
  for (Eigen::Index i = 0; i < model.params.size(); ++i) params.push_back(tape.parameter(model.params[i]));

  const auto interior = reference_fields(model.net, params, samples.collocation, problem.residual_channels());
  ad::Var lr(0.0);
  for (std::size_t p = 0; p < interior.size(); ++p) {
    const auto col = static_cast<Eigen::Index>(p);
    const ad::Var r = problem.residual(interior[p], samples.collocation(0, col), samples.collocation(1, col));
    lr = lr + r * r;
  }
  lr = lr / static_cast<double>(interior.size());

  ad::Var lic(0.0);
  if (problem.has_time()) {
    const auto ic = reference_fields(model.net, params, samples.initial, problem.initial_channels());
    for (std::size_t p = 0; p < ic.size(); ++p) {
      const ad::Var e = ic[p].u - samples.initial_target[static_cast<Eigen::Index>(p)];
      lic = lic + e * e;
      if (problem.has_initial_velocity()) lic = lic + ic[p].d1[1] * ic[p].d1[1];
    }
    lic = lic / static_cast<double>(ic.size());
  }

  ad::Var lbc(0.0);
  const auto bc = reference_fields(model.net, params, samples.boundary, kernels::ChannelSpec::value_only(2));
  if (samples.periodic) {
    const auto m = static_cast<std::size_t>(samples.pairs());
    for (std::size_t p = 0; p < m; ++p) {
      const ad::Var e = bc[p].u - bc[m + p].u;
      lbc = lbc + e * e;
    }
    lbc = lbc / static_cast<double>(m);
  } else {
    for (std::size_t p = 0; p < bc.size(); ++p) {
      const ad::Var e = bc[p].u - samples.boundary_target[static_cast<Eigen::Index>(p)];
      lbc = lbc + e * e;
    }
    lbc = lbc / static_cast<double>(bc.size());
  }

  const ad::Var total = weights.ic * lic + weights.bc * lbc + weights.r * lr;
  require_finite(lr.value, "loss_r");
  require_finite(lic.value, "loss_ic");
  require_finite(lbc.value, "loss_bc");
  if (grad != nullptr) *grad = tape.gradient(total);
  return {total.value, lic.value, lbc.value, lr.value};
}

}  // namespace maskpinn::train
