#include "maskpinn/nn/norm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maskpinn::nn {

namespace {

double rstd(double var, double eps) {
  const double v = std::max(var, eps);
  return v > 0.0 ? 1.0 / std::sqrt(v) : 0.0;
}

}  // namespace

Eigen::MatrixXd norm_forward(NormKind kind, const Eigen::MatrixXd& z, const Eigen::VectorXd& gain,
                             const Eigen::VectorXd& shift, double eps) {
  if (gain.size() != z.rows() || shift.size() != z.rows()) {
    throw std::invalid_argument("norm_forward: gain and shift must have one entry per feature");
  }
  if (eps < 0.0) throw std::invalid_argument("norm_forward: eps must be >= 0");
  Eigen::MatrixXd out(z.rows(), z.cols());
  if (kind == NormKind::Batch) {
    if (z.cols() < 2) throw std::invalid_argument("batch norm needs a batch of at least 2");
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double mu = z.row(i).mean();
      const double var = (z.row(i).array() - mu).square().mean();
      const double r = rstd(var, eps);
      out.row(i) = gain[i] * ((z.row(i).array() - mu) * r) + shift[i];
    }
  } else {
    if (z.rows() < 2) throw std::invalid_argument("layer norm needs at least 2 features");
    for (Eigen::Index p = 0; p < z.cols(); ++p) {
      const double mu = z.col(p).mean();
      const double var = (z.col(p).array() - mu).square().mean();
      const double r = rstd(var, eps);
      out.col(p) = gain.array() * ((z.col(p).array() - mu) * r) + shift.array();
    }
  }
  return out;
}

}  // namespace maskpinn::nn
