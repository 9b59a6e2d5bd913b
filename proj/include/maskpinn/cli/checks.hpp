#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "maskpinn/pde/problem.hpp"

namespace maskpinn::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct CheckOptions {
  int networks = 24;  // one per variant x activation
  int points = 100;
  int mask_samples = 10000;
  std::uint64_t seed = 20240601;
};

/// Worst |residual| at interior points and worst initial/boundary violation
/// of the problem's closed-form solution.
struct GateReport {
  double max_residual = 0.0;
  double max_violation = 0.0;
};
[[nodiscard]] GateReport manufactured_gate(const pde::Problem& problem, int points, std::uint64_t seed);

/// Names of all checks, in execution order.
[[nodiscard]] std::vector<std::string> check_names();

/// Runs every check whose name contains `filter` (all when empty). Throws
/// std::invalid_argument when nothing matches.
[[nodiscard]] std::vector<CheckResult> run_checks(const std::string& filter, const CheckOptions& opts = {});

/// Prints one line per check; returns 0 when all pass, 2 otherwise.
int report_checks(const std::vector<CheckResult>& results, std::ostream& out);

}  // namespace maskpinn::cli
