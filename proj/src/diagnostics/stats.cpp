#include "maskpinn/diagnostics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace maskpinn::diag {

double relative_l2(std::span<const double> pred, std::span<const double> exact) {
  if (pred.size() != exact.size()) throw std::invalid_argument("relative_l2: length mismatch");
  if (exact.empty()) throw std::invalid_argument("relative_l2: empty field");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = pred[i] - exact[i];
    num += d * d;
    den += exact[i] * exact[i];
  }
  if (den == 0.0) throw std::invalid_argument("relative_l2: exact field is identically zero");
  return std::sqrt(num / den);
}

int Histogram::bin_of(double v) {
  if (std::isnan(v) || v > kHi) return kBins - 1;
  if (v < kLo) return 0;
  const int interior = std::min(kInterior - 1, static_cast<int>((v - kLo) / (kHi - kLo) * kInterior));
  return 1 + interior;
}

std::int64_t PreActRow::total() const { return std::accumulate(bins.begin(), bins.end(), std::int64_t{0}); }

std::vector<PreActRow> summarize(const kernels::PreActCapture& capture, int iteration) {
  std::vector<PreActRow> rows;
  rows.reserve(capture.layers.size());
  for (std::size_t l = 0; l < capture.layers.size(); ++l) {
    const Eigen::MatrixXd& z = capture.layers[l];
    PreActRow row;
    row.iter = iteration;
    row.layer = static_cast<int>(l);
    const auto count = static_cast<double>(z.size());
    if (z.size() > 0) {
      row.mean = z.sum() / count;
      row.var = (z.array() - row.mean).square().sum() / count;
      row.min = z.minCoeff();
      row.max = z.maxCoeff();
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) ++row.bins[static_cast<std::size_t>(Histogram::bin_of(z.data()[i]))];
    rows.push_back(row);
  }
  return rows;
}

std::vector<PreActRow> preact_snapshot(const nn::Model& model, const Eigen::MatrixXd& probe, int iteration,
                                       const kernels::ExecPolicy& policy) {
  kernels::PreActCapture capture;
  (void)kernels::evaluate(model, probe, policy, &capture);
  return summarize(capture, iteration);
}

VarianceTrace max_variance_trace(const PreActStats& stats) {
  std::map<int, double> best;
  for (const auto& r : stats.rows) {
    auto [it, inserted] = best.try_emplace(r.iter, r.var);
    if (!inserted) it->second = std::max(it->second, r.var);
  }
  VarianceTrace t;
  for (const auto& [iter, v] : best) {
    t.iter.push_back(iter);
    t.max_var.push_back(v);
  }
  return t;
}

Trend linear_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_trend needs >= 2 paired values");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_trend: x values are all equal");
  Trend t;
  t.slope = sxy / sxx;
  if (x.size() > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (my + t.slope * (x[i] - mx));
      sse += e * e;
    }
    t.stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return t;
}

Spread mean_spread(std::span<const double> values) {
  Spread s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  return s;
}

}  // namespace maskpinn::diag
