#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "maskpinn/pde/problem.hpp"

namespace maskpinn::pde {

struct SampleCounts {
  int interior = 10000;
  int initial = 256;
  int boundary = 256;  // per face, or periodic pairs

  bool operator==(const SampleCounts&) const = default;
};

/// Fixed training points for one run. All point blocks are 2 x N.
struct SampleSet {
  Eigen::MatrixXd collocation;
  Eigen::MatrixXd initial;  // t = 0; empty for steady problems
  Eigen::VectorXd initial_target;
  /// Dirichlet: all faces stacked. Periodic: the first half holds the x = lo
  /// side of each pair, the second half the x = hi side at the same t.
  Eigen::MatrixXd boundary;
  Eigen::VectorXd boundary_target;  // Dirichlet only
  bool periodic = false;

  [[nodiscard]] Eigen::Index pairs() const { return periodic ? boundary.cols() / 2 : 0; }
};

/// Uniform draws; deterministic for a given seed.
[[nodiscard]] SampleSet sample_points(const Problem& problem, const SampleCounts& counts, std::uint64_t seed);

/// Uniform interior points from the probe stream of `seed`.
[[nodiscard]] Eigen::MatrixXd probe_points(const Problem& problem, int count, std::uint64_t seed);

}  // namespace maskpinn::pde
