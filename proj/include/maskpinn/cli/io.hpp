#pragma once

// On-disk artifacts. CSV files are UTF-8 with '.' decimals and no thousands
// separators; doubles are written in shortest round-trip form.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "maskpinn/diagnostics/stats.hpp"
#include "maskpinn/train/trainer.hpp"

namespace maskpinn::cli {

inline constexpr const char* kMetricsHeader = "iter,loss_total,loss_ic,loss_bc,loss_r,rel_l2,wall_ms";
inline constexpr const char* kSweepHeader = "width,variant,activation,seed,final_rel_l2,status";
inline constexpr const char* kEngineVersion = "maskpinn 1.0.0";

[[nodiscard]] std::string preact_header();
[[nodiscard]] std::string format_number(double v);

void write_metrics(std::ostream& out, const train::MetricsLog& log);
void write_preact(std::ostream& out, const diag::PreActStats& stats);
void write_metrics(const std::filesystem::path& path, const train::MetricsLog& log);
void write_preact(const std::filesystem::path& path, const diag::PreActStats& stats);

/// A parsed CSV: header names and rows of raw cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws std::out_of_range when absent.
  [[nodiscard]] std::size_t column(const std::string& name) const;
  /// Cell as a number; empty cells read as NaN.
  [[nodiscard]] double number(std::size_t row, std::size_t col) const;
};
[[nodiscard]] Table read_csv(const std::filesystem::path& path);

/// First free directory among `base`, `base-1`, `base-2`, ...: a directory
/// that already holds a manifest is never reused.
[[nodiscard]] std::filesystem::path versioned_dir(const std::filesystem::path& base);

struct TrialRecord {
  std::uint64_t seed = 0;
  std::string status;  // "converged", "diverged@<iter>" or "error"
  std::string detail;
  std::vector<std::string> artifacts;
  double final_rel_l2 = 0.0;
};

struct Manifest {
  std::string command;
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::vector<TrialRecord> trials;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Static SVG line chart. Non-finite or (on log axes) non-positive points
/// are dropped.
[[nodiscard]] std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace maskpinn::cli
