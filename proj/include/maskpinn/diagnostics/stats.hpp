#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "maskpinn/kernels/engine.hpp"
#include "maskpinn/nn/network.hpp"

namespace maskpinn::diag {

/// ||pred - exact||_2 / ||exact||_2. Throws std::invalid_argument on a length
/// mismatch, empty input or an all-zero exact field.
[[nodiscard]] double relative_l2(std::span<const double> pred, std::span<const double> exact);

/// 64 equal bins over [-10, 10] plus an underflow bin (index 0) and an
/// overflow bin (index 65). The value 10 itself lands in the last interior bin.
struct Histogram {
  static constexpr int kInterior = 64;
  static constexpr int kBins = kInterior + 2;
  static constexpr double kLo = -10.0;
  static constexpr double kHi = 10.0;

  [[nodiscard]] static int bin_of(double v);
};

struct PreActRow {
  int iter = 0;
  int layer = 0;
  double mean = 0.0;
  double var = 0.0;  // population variance
  double min = 0.0;
  double max = 0.0;
  std::array<std::int64_t, Histogram::kBins> bins{};

  [[nodiscard]] std::int64_t total() const;
};

struct PreActStats {
  std::vector<PreActRow> rows;
};

/// One row per hidden layer for a captured batch.
[[nodiscard]] std::vector<PreActRow> summarize(const kernels::PreActCapture& capture, int iteration);

/// Evaluates the network on the probe batch (eval mode) and summarizes each
/// hidden layer's pre-activations.
[[nodiscard]] std::vector<PreActRow> preact_snapshot(const nn::Model& model, const Eigen::MatrixXd& probe,
                                                     int iteration, const kernels::ExecPolicy& policy = {});

/// Largest per-layer variance at each logged iteration, in iteration order.
struct VarianceTrace {
  std::vector<int> iter;
  std::vector<double> max_var;
};
[[nodiscard]] VarianceTrace max_variance_trace(const PreActStats& stats);

/// Ordinary least-squares slope of y on x with its standard error.
struct Trend {
  double slope = 0.0;
  double stderr_slope = 0.0;
};
[[nodiscard]] Trend linear_trend(std::span<const double> x, std::span<const double> y);

/// Population mean and standard deviation.
struct Spread {
  double mean = 0.0;
  double stddev = 0.0;
};
[[nodiscard]] Spread mean_spread(std::span<const double> values);

}  // namespace maskpinn::diag
