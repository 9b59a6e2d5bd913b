#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "maskpinn/cli/config.hpp"
#include "maskpinn/cli/io.hpp"
#include "maskpinn/diagnostics/sweep.hpp"

namespace maskpinn::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kOracleFailure = 2, kAllDiverged = 3 };

struct RunReport {
  std::filesystem::path dir;  // the (possibly versioned) directory written
  Manifest manifest;
  int exit_code = kOk;
};

/// Trains every trial of `cfg` into `out`: trial_<seed>/metrics.csv,
/// trial_<seed>/preact.csv, config.toml, summary.csv and manifest.txt.
/// Per-trial failures are recorded, not thrown.
RunReport run_experiment(const ExperimentConfig& cfg, const std::string& config_path,
                         const std::filesystem::path& out, std::ostream& log);

struct SweepReport {
  std::filesystem::path dir;
  Manifest manifest;
  diag::WidthSweepResult result;
  int exit_code = kOk;
};

/// One run per (width, seed) at the configured depth, written as sweep.csv,
/// sweep_summary.csv and w<width>_s<seed>/metrics.csv.
SweepReport sweep_experiment(const ExperimentConfig& cfg, const std::string& config_path,
                             const std::vector<int>& widths, const std::filesystem::path& out, std::ostream& log);

/// Renders every metrics.csv, preact.csv and sweep.csv found under `in`
/// into SVG charts in `out`. Returns the files written.
std::vector<std::filesystem::path> plot_directory(const std::filesystem::path& in, const std::filesystem::path& out);

/// Comma-separated positive integers, e.g. "16,64,256".
[[nodiscard]] std::vector<int> parse_width_list(const std::string& text);

}  // namespace maskpinn::cli
