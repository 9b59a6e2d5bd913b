#include "maskpinn/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "maskpinn/autodiff/tape.hpp"
#include "maskpinn/train/adam.hpp"

namespace maskpinn::train {

void TrainConfig::validate() const {
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!nonneg(lambda.ic) || !nonneg(lambda.bc) || !nonneg(lambda.r)) {
    throw std::invalid_argument("training.lambda_* must be finite and >= 0");
  }
  if (lambda.ic + lambda.bc + lambda.r <= 0.0) throw std::invalid_argument("training.lambda_*: at least one must be > 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("training.lr must be > 0");
  if (iterations < 0) throw std::invalid_argument("training.iterations must be >= 0");
  if (log_every < 1) throw std::invalid_argument("training.log_every must be >= 1");
  if (counts.interior < 1) throw std::invalid_argument("training.n_interior must be >= 1");
  if (counts.initial < 1) throw std::invalid_argument("training.n_initial must be >= 1");
  if (counts.boundary < 1) throw std::invalid_argument("training.n_boundary must be >= 1");
  const bool default_grid = eval_grid[0] == 0 && eval_grid[1] == 0;
  if (!default_grid && (eval_grid[0] < 2 || eval_grid[1] < 2)) {
    throw std::invalid_argument("training.eval_grid needs >= 2 points per axis");
  }
  if (probe_size < 1) throw std::invalid_argument("training.probe_size must be >= 1");
  if (threads < 1) throw std::invalid_argument("training.threads must be >= 1");
}

double TrainResult::final_rel_l2() const {
  if (status == RunStatus::Diverged || metrics.rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  return metrics.rows.back().rel_l2;
}

TrainResult train(const pde::Problem& problem, const nn::Architecture& arch, const TrainConfig& cfg) {
  cfg.validate();
  if (arch.input_dim != 2) throw std::invalid_argument("architecture.input_dim must be 2 for the shipped problems");
  if (arch.output_dim != 1) throw std::invalid_argument("architecture.output_dim must be 1");

  const auto start = std::chrono::steady_clock::now();
  TrainResult res{nn::make_model(arch, cfg.seed), {}, {}, RunStatus::Converged, -1, {}};
  nn::Model& model = res.model;

  const pde::SampleSet samples = pde::sample_points(problem, cfg.counts, cfg.seed);
  const auto dims = cfg.eval_grid[0] == 0 ? pde::default_eval_grid(problem.kind()) : cfg.eval_grid;
  const Eigen::MatrixXd grid = pde::grid(problem, dims[0], dims[1]);
  std::vector<double> exact(static_cast<std::size_t>(grid.cols()));
  for (Eigen::Index p = 0; p < grid.cols(); ++p) exact[static_cast<std::size_t>(p)] = problem.exact(grid(0, p), grid(1, p));
  const Eigen::MatrixXd probe = pde::probe_points(problem, cfg.probe_size, cfg.seed);

  kernels::ExecPolicy policy;
  policy.threads = cfg.threads;
  LossEvaluator loss(problem, samples, cfg.lambda, policy);
  AdamState adam(model.params.size());
  Eigen::VectorXd grad;

  for (int it = 0;; ++it) {
    const bool log_row = it % cfg.log_every == 0 || it == cfg.iterations;
    try {
      const LossComponents c = loss.evaluate(model, it < cfg.iterations ? &grad : nullptr, &model.norm);
      if (log_row) {
        const Eigen::MatrixXd pred = kernels::evaluate(model, grid, policy);
        if (!pred.allFinite()) throw ad::NonFiniteError("prediction is not finite");
        MetricsRow row{it, c.total, c.ic, c.bc, c.r,
                       diag::relative_l2({pred.data(), static_cast<std::size_t>(pred.size())}, exact), 0.0};
        if (cfg.record_time) {
          row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
        res.metrics.rows.push_back(row);
        if (cfg.capture_preact) {
          auto rows = diag::preact_snapshot(model, probe, it, policy);
          res.preact.rows.insert(res.preact.rows.end(), rows.begin(), rows.end());
        }
      }
      if (it == cfg.iterations) break;
      adam_step(model.params, grad, adam, cfg.lr);
    } catch (const ad::NonFiniteError& e) {
      res.status = RunStatus::Diverged;
      res.diverged_at = it;
      res.note = e.what();
      break;
    }
  }
  return res;
}

}  // namespace maskpinn::train
