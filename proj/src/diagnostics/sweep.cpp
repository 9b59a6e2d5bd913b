#include "maskpinn/diagnostics/sweep.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maskpinn::diag {

int parity_depth(nn::Variant variant, int plain_depth) {
  if (plain_depth < 1) throw std::invalid_argument("plain_depth must be >= 1");
  if (variant != nn::Variant::Mask) return plain_depth;
  const int target = plain_depth - 1;
  const int even = 2 * ((target + 1) / 2);
  return even < 2 ? 2 : even;
}

WidthSweepResult width_sweep(const pde::Problem& problem, const nn::Architecture& arch, std::span<const int> widths,
                             std::span<const std::uint64_t> seeds, const train::TrainConfig& cfg,
                             const SweepObserver& observer) {
  if (widths.empty()) throw std::invalid_argument("widths must not be empty");
  if (seeds.empty()) throw std::invalid_argument("seeds must not be empty");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1) throw std::invalid_argument("widths must be positive");
    if (i > 0 && widths[i] <= widths[i - 1]) throw std::invalid_argument("widths must be strictly increasing");
  }

  WidthSweepResult out;
  out.variant = arch.variant;
  out.activation = arch.activation;
  for (const int w : widths) {
    nn::Architecture a = arch;
    a.width = w;
    SweepCell cell;
    cell.width = w;
    cell.depth = a.depth;
    cell.parameters = nn::Network(a).parameter_count();
    std::vector<double> finals;
    for (const auto seed : seeds) {
      train::TrainConfig c = cfg;
      c.seed = seed;
      const train::TrainResult r = train::train(problem, a, c);
      SweepRun run{w, seed, r.status, r.diverged_at, r.final_rel_l2()};
      if (run.status == train::RunStatus::Converged && std::isfinite(run.final_rel_l2)) {
        finals.push_back(run.final_rel_l2);
        ++cell.converged;
      } else {
        ++cell.diverged;
      }
      if (observer) observer(run, r);
      out.runs.push_back(run);
    }
    if (!finals.empty()) {
      cell.error = mean_spread(finals);
    } else {
      cell.error = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    }
    out.cells.push_back(cell);
  }
  return out;
}

std::vector<double> mean_errors(const WidthSweepResult& result) {
  std::vector<double> m;
  m.reserve(result.cells.size());
  for (const auto& c : result.cells) m.push_back(c.converged > 0 ? c.error.mean : std::numeric_limits<double>::quiet_NaN());
  return m;
}

bool non_increasing(std::span<const double> means, double slack) {
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (!std::isfinite(means[i])) return false;
    if (i > 0 && means[i] > means[i - 1] * (1.0 + slack)) return false;
  }
  return true;
}

}  // namespace maskpinn::diag
