#include "maskpinn/autodiff/gradcheck.hpp"

#include <limits>

namespace maskpinn::ad {

GradCheckReport compare_derivatives(std::span<const double> analytic, std::span<const double> reference,
                                    int order) {
  if (analytic.size() != reference.size()) {
    throw std::invalid_argument("compare_derivatives: length mismatch");
  }
  GradCheckReport report;
  report.order = order;
  double scale = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    scale = std::max({scale, std::abs(analytic[k]), std::abs(reference[k])});
  }
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double diff = std::abs(analytic[k] - reference[k]);
    double rel = 0.0;
    if (diff > 0.0) rel = scale > 0.0 ? diff / scale : diff;
    if (!std::isfinite(diff)) rel = std::numeric_limits<double>::infinity();
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = k;
    }
  }
  return report;
}

std::vector<double> central_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                                std::span<const double> x, double step) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + step;
    const double up = f(probe);
    probe[k] = x[k] - step;
    const double down = f(probe);
    probe[k] = x[k];
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace maskpinn::ad
