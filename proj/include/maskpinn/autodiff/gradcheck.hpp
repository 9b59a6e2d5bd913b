#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "maskpinn/autodiff/jet.hpp"

namespace maskpinn::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_coordinate = 0;
  int order = 1;
};

/// Worst mismatch between an analytic and a reference derivative vector.
/// Each coordinate's absolute error is divided by the largest magnitude over
/// both vectors, so a single coordinate reduces to |a-b| / max(|a|,|b|) and
/// near-zero entries of a long gradient do not dominate. 0/0 counts as 0.
[[nodiscard]] GradCheckReport compare_derivatives(std::span<const double> analytic,
                                                  std::span<const double> reference, int order);

/// Central differences of a scalar function of many variables.
[[nodiscard]] std::vector<double> central_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> x, double step);

/// Compares jet derivatives of f against central differences in every input
/// coordinate. order 1 uses (f(x+h)-f(x-h))/2h, order 2 uses
/// (f(x+h)-2f(x)+f(x-h))/h^2.
template <class F>
GradCheckReport check_gradients(F&& f, std::span<const double> x, int order, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("check_gradients: step must be positive");
  if (order != 1 && order != 2) throw std::invalid_argument("check_gradients: order must be 1 or 2");

  auto plain = [&](std::span<const double> p) {
    std::vector<Jet<double>> lifted(p.begin(), p.end());
    return f(std::span<const Jet<double>>(lifted)).value;
  };

  std::vector<double> analytic(x.size());
  std::vector<double> reference(x.size());
  std::vector<double> probe(x.begin(), x.end());
  const double centre = plain(x);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Jet<double> j = jet_eval(f, x, k);
    analytic[k] = order == 1 ? j.d1 : j.d2;
    probe[k] = x[k] + step;
    const double up = plain(probe);
    probe[k] = x[k] - step;
    const double down = plain(probe);
    probe[k] = x[k];
    reference[k] = order == 1 ? (up - down) / (2.0 * step) : (up - 2.0 * centre + down) / (step * step);
  }
  return compare_derivatives(analytic, reference, order);
}

}  // namespace maskpinn::ad
