#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "maskpinn/diagnostics/stats.hpp"
#include "maskpinn/nn/network.hpp"
#include "maskpinn/pde/problem.hpp"
#include "maskpinn/pde/sampling.hpp"
#include "maskpinn/train/loss.hpp"

namespace maskpinn::train {

struct TrainConfig {
  LossWeights lambda;
  double lr = 1e-3;
  int iterations = 1000;
  pde::SampleCounts counts;
  std::uint64_t seed = 0;
  int log_every = 100;
  /// Points per axis; {0, 0} selects the problem default.
  std::array<int, 2> eval_grid{0, 0};
  int probe_size = 1024;
  int threads = 1;
  /// When false wall_ms is logged as 0, making logs byte-reproducible.
  bool record_time = true;
  bool capture_preact = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct MetricsRow {
  int iter = 0;
  double loss_total = 0.0;
  double loss_ic = 0.0;
  double loss_bc = 0.0;
  double loss_r = 0.0;
  double rel_l2 = 0.0;
  double wall_ms = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;  // iterations strictly increasing
};

enum class RunStatus { Converged, Diverged };

struct TrainResult {
  nn::Model model;
  MetricsLog metrics;
  diag::PreActStats preact;
  RunStatus status = RunStatus::Converged;
  int diverged_at = -1;
  std::string note;

  /// rel_l2 of the last logged row; NaN when diverged or nothing was logged.
  [[nodiscard]] double final_rel_l2() const;
};

/// Full-batch Adam. Row k holds the loss at the parameters entering
/// iteration k; rows are logged at 0, every log_every and the last iteration.
/// A non-finite loss, gradient or prediction stops the run as Diverged with
/// the rows logged so far.
[[nodiscard]] TrainResult train(const pde::Problem& problem, const nn::Architecture& arch, const TrainConfig& cfg);

}  // namespace maskpinn::train
