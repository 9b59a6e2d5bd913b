#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "maskpinn/diagnostics/stats.hpp"
#include "maskpinn/nn/network.hpp"
#include "maskpinn/pde/problem.hpp"
#include "maskpinn/train/trainer.hpp"

namespace maskpinn::diag {

/// Depth giving `variant` about the parameter count of a plain network with
/// `plain_depth` hidden layers at the same width. Mask depth is even (two
/// gated layers per block) and carries a stem layer, so it maps to
/// plain_depth - 1 rounded to the nearest even value, at least 2.
[[nodiscard]] int parity_depth(nn::Variant variant, int plain_depth);

struct SweepRun {
  int width = 0;
  std::uint64_t seed = 0;
  train::RunStatus status = train::RunStatus::Converged;
  int diverged_at = -1;
  double final_rel_l2 = 0.0;  // NaN when diverged
};

/// Aggregate over the seeds of one width; diverged runs are counted but
/// excluded from the spread.
struct SweepCell {
  int width = 0;
  int depth = 0;
  std::size_t parameters = 0;
  Spread error;
  int converged = 0;
  int diverged = 0;
};

struct WidthSweepResult {
  nn::Variant variant = nn::Variant::Vanilla;
  nn::Activation activation = nn::Activation::Tanh;
  std::vector<SweepRun> runs;    // width-major, seeds in the given order
  std::vector<SweepCell> cells;  // widths strictly increasing
};

using SweepObserver = std::function<void(const SweepRun&, const train::TrainResult&)>;

/// Trains `arch` at every width and seed; arch.depth is used as given.
/// Throws std::invalid_argument when widths are empty or not strictly
/// increasing, or seeds are empty.
[[nodiscard]] WidthSweepResult width_sweep(const pde::Problem& problem, const nn::Architecture& arch,
                                           std::span<const int> widths, std::span<const std::uint64_t> seeds,
                                           const train::TrainConfig& cfg, const SweepObserver& observer = {});

/// Cell means in width order; NaN for a cell with no converged run.
[[nodiscard]] std::vector<double> mean_errors(const WidthSweepResult& result);

/// True when every mean is finite and none exceeds its predecessor by more
/// than `slack` (relative).
[[nodiscard]] bool non_increasing(std::span<const double> means, double slack = 0.0);

}  // namespace maskpinn::diag
