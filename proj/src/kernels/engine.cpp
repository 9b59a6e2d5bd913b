#include "maskpinn/kernels/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maskpinn/nn/mask.hpp"
#include "pointwise.hpp"

namespace maskpinn::kernels {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nn::Op;
using nn::OpKind;

ChannelSpec ChannelSpec::value_only(int input_dim) {
  ChannelSpec s;
  s.input_dim = input_dim;
  return s;
}

ChannelSpec ChannelSpec::full(int input_dim) {
  ChannelSpec s;
  s.input_dim = input_dim;
  for (int k = 0; k < input_dim; ++k) s.first[k] = s.second[k] = true;
  return s;
}

ChannelSpec ChannelSpec::closed() const {
  ChannelSpec s = *this;
  for (int k = 0; k < 2; ++k) {
    if (k >= input_dim) s.first[k] = s.second[k] = false;
    if (s.second[k]) s.first[k] = true;
  }
  return s;
}

int ChannelSpec::count() const {
  const ChannelSpec s = closed();
  int c = 1;
  for (int k = 0; k < 2; ++k) c += static_cast<int>(s.first[k]) + static_cast<int>(s.second[k]);
  return c;
}

int ChannelSpec::first_index(int k) const {
  const ChannelSpec s = closed();
  if (k < 0 || k >= 2 || !s.first[k]) return -1;
  int c = 1;
  for (int j = 0; j < k; ++j) c += static_cast<int>(s.first[j]);
  return c;
}

int ChannelSpec::second_index(int k) const {
  const ChannelSpec s = closed();
  if (k < 0 || k >= 2 || !s.second[k]) return -1;
  int c = 1 + static_cast<int>(s.first[0]) + static_cast<int>(s.first[1]);
  for (int j = 0; j < k; ++j) c += static_cast<int>(s.second[j]);
  return c;
}

namespace {

struct ChannelMap {
  int count = 1;
  std::vector<int> first;
  std::vector<int> second;
  std::vector<int> partner;  // first-order channel of the same direction as second[j]

  explicit ChannelMap(const ChannelSpec& spec) : count(spec.count()) {
    for (int k = 0; k < 2; ++k) {
      if (spec.first_index(k) >= 0) first.push_back(spec.first_index(k));
    }
    for (int k = 0; k < 2; ++k) {
      if (spec.second_index(k) >= 0) {
        second.push_back(spec.second_index(k));
        partner.push_back(spec.first_index(k));
      }
    }
  }
};

Index chunk_count(Index n, Index chunk) { return (n + chunk - 1) / chunk; }

template <class F>
void parallel_chunks(Index n, Index chunk, int threads, F&& f) {
  const Index chunks = chunk_count(n, chunk);
#pragma omp parallel for schedule(static) num_threads(threads) if (threads > 1)
  for (Index c = 0; c < chunks; ++c) {
    const Index begin = c * chunk;
    f(c, begin, std::min(chunk, n - begin));
  }
}

// Dense ---------------------------------------------------------------------

void dense_forward(const Op& op, const VectorXd& params, const MatrixXd& in, MatrixXd& out, Index n,
                   const ExecPolicy& pol) {
  const Map<const MatrixXd> w(params.data() + op.weight, op.out, op.in);
  const Map<const VectorXd> b(params.data() + op.bias, op.out);
  out.resize(op.out, in.cols());
  parallel_chunks(in.cols(), pol.column_chunk, pol.threads, [&](Index, Index c0, Index nc) {
    out.middleCols(c0, nc).noalias() = w * in.middleCols(c0, nc);
    for (Index col = c0; col < std::min(c0 + nc, n); ++col) out.col(col) += b;
  });
}

void dense_backward(const Op& op, const VectorXd& params, const MatrixXd& in, const MatrixXd& g_out,
                    MatrixXd& g_in, VectorXd& grad, Index n, const ExecPolicy& pol) {
  const Map<const MatrixXd> w(params.data() + op.weight, op.out, op.in);
  Map<MatrixXd> gw(grad.data() + op.weight, op.out, op.in);
  Map<VectorXd> gb(grad.data() + op.bias, op.out);
  parallel_chunks(op.out, pol.row_chunk, pol.threads, [&](Index, Index r0, Index nr) {
    gw.middleRows(r0, nr).noalias() += g_out.middleRows(r0, nr) * in.transpose();
    gb.segment(r0, nr) += g_out.block(r0, 0, nr, n).rowwise().sum();
  });
  g_in.resize(op.in, g_out.cols());
  parallel_chunks(g_out.cols(), pol.column_chunk, pol.threads, [&](Index, Index c0, Index nc) {
    g_in.middleCols(c0, nc).noalias() = w.transpose() * g_out.middleCols(c0, nc);
  });
}

// Pointwise -----------------------------------------------------------------

// Cache planes per point: f1, f2, f3, then p0, p1, p2 for gated maps.
constexpr Index kPlainPlanes = 3;
constexpr Index kGatedPlanes = 6;

const detail::Planes& pointwise_planes(const Op& op, const VectorXd& params, nn::Activation act,
                                       const Eigen::Ref<const Eigen::ArrayXXd>& z) {
  switch (op.gate) {
    case nn::Gate::Mask:
      return detail::masked_planes(act, z, params.segment(static_cast<Index>(op.gate_param), op.out).array());
    case nn::Gate::Scale: return detail::scaled_planes(act, z, params[static_cast<Index>(op.gate_param)]);
    case nn::Gate::None: break;
  }
  return detail::activation_planes(act, z);
}

void pointwise_forward(const Op& op, const nn::Model& model, const MatrixXd& z, MatrixXd& h, Index n,
                       const ChannelMap& cm, const ExecPolicy& pol, MatrixXd* cache) {
  const Index rows = z.rows();
  const Index planes = op.gate == nn::Gate::None ? kPlainPlanes : kGatedPlanes;
  const nn::Activation act = model.net.architecture().activation;
  h.resize(rows, z.cols());
  if (cache != nullptr) cache->resize(rows, planes * n);
  parallel_chunks(n, pol.point_chunk, pol.threads, [&](Index, Index p0, Index np) {
    auto at = [&](const MatrixXd& m, Index c) { return m.block(0, c * n + p0, rows, np).array(); };
    const detail::Planes& d = pointwise_planes(op, model.params, act, at(z, 0));
    h.block(0, p0, rows, np).array() = d.f0;
    for (const int c : cm.first) h.block(0, c * n + p0, rows, np).array() = d.f1 * at(z, c);
    for (std::size_t j = 0; j < cm.second.size(); ++j) {
      h.block(0, cm.second[j] * n + p0, rows, np).array() =
          d.f2 * at(z, cm.partner[j]).square() + d.f1 * at(z, cm.second[j]);
    }
    if (cache != nullptr) {
      auto put = [&](Index plane, const Eigen::ArrayXXd& v) { cache->block(0, plane * n + p0, rows, np).array() = v; };
      put(0, d.f1);
      put(1, d.f2);
      put(2, d.f3);
      if (planes == kGatedPlanes) {
        put(3, d.p0);
        put(4, d.p1);
        put(5, d.p2);
      }
    }
  });
}

// Reverse of pointwise_forward from its derivative cache. Accumulates
// d(param)/d(.) per row into `param_grad` (size rows) when not null.
void pointwise_backward_impl(const MatrixXd& z, const MatrixXd& cache, const MatrixXd& g, MatrixXd& gz, Index n,
                             const ChannelMap& cm, const ExecPolicy& pol, VectorXd* param_grad) {
  const Index rows = z.rows();
  gz.resize(rows, z.cols());
  const Index chunks = chunk_count(n, pol.point_chunk);
  const bool gated = param_grad != nullptr;
  MatrixXd partial;
  if (gated) partial = MatrixXd::Zero(rows, chunks);
  parallel_chunks(n, pol.point_chunk, pol.threads, [&](Index chunk, Index p0, Index np) {
    auto at = [&](const MatrixXd& m, Index c) { return m.block(0, c * n + p0, rows, np).array(); };
    auto out = [&](Index c) { return gz.block(0, c * n + p0, rows, np).array(); };
    const auto f1 = at(cache, 0);
    const auto f2 = at(cache, 1);
    const auto f3 = at(cache, 2);
    Eigen::ArrayXXd dz0 = at(g, 0) * f1;
    Eigen::ArrayXXd dp;
    if (gated) dp = at(g, 0) * at(cache, 3);
    for (const int c : cm.first) {
      dz0 += at(g, c) * f2 * at(z, c);
      if (gated) dp += at(g, c) * at(cache, 4) * at(z, c);
      out(c) = at(g, c) * f1;
    }
    for (std::size_t j = 0; j < cm.second.size(); ++j) {
      const Index sc = cm.second[j];
      const Index fc = cm.partner[j];
      const auto zf2 = at(z, fc).square();
      dz0 += at(g, sc) * (f3 * zf2 + f2 * at(z, sc));
      if (gated) dp += at(g, sc) * (at(cache, 5) * zf2 + at(cache, 4) * at(z, sc));
      out(fc) += at(g, sc) * 2.0 * f2 * at(z, fc);
      out(sc) = at(g, sc) * f1;
    }
    out(0) = dz0;
    if (gated) partial.col(chunk) = dp.rowwise().sum().matrix();
  });
  if (gated) {
    for (Index c = 0; c < chunks; ++c) *param_grad += partial.col(c);
  }
}

void pointwise_backward(const Op& op, const MatrixXd& z, const MatrixXd& cache, const MatrixXd& g, MatrixXd& gz,
                        VectorXd& grad, Index n, const ChannelMap& cm, const ExecPolicy& pol) {
  if (cache.cols() == 0) throw std::invalid_argument("backward: record was made without derivative caches");
  if (op.gate == nn::Gate::None) {
    pointwise_backward_impl(z, cache, g, gz, n, cm, pol, nullptr);
    return;
  }
  VectorXd pg = VectorXd::Zero(z.rows());
  pointwise_backward_impl(z, cache, g, gz, n, cm, pol, &pg);
  const auto offset = static_cast<Index>(op.gate_param);
  if (op.gate == nn::Gate::Mask) {
    grad.segment(offset, pg.size()) += pg;
  } else {
    double total = 0.0;
    for (Index i = 0; i < pg.size(); ++i) total += pg[i];
    grad[offset] += total;
  }
}

// Batch norm ----------------------------------------------------------------

double inverse_std(double var, double eps) {
  const double v = std::max(var, eps);
  return v > 0.0 ? 1.0 / std::sqrt(v) : 0.0;
}

void bn_forward(const Op& op, const nn::Model& model, const MatrixXd& z, MatrixXd& h, Index n, Mode mode,
                const ExecPolicy& pol, VectorXd& mean_out, VectorXd& rstd_out, VectorXd& clamped_out,
                nn::NormState* running) {
  const Index rows = z.rows();
  const Map<const VectorXd> gain(model.params.data() + op.gain, rows);
  const Map<const VectorXd> shift(model.params.data() + op.shift, rows);
  const auto slot = static_cast<std::size_t>(op.norm_slot);
  if (mode == Mode::Train && n < 2) throw std::invalid_argument("batch norm needs a batch of at least 2 points");
  mean_out.resize(rows);
  rstd_out.resize(rows);
  clamped_out.resize(rows);
  VectorXd batch_var(rows);
  h.resize(rows, z.cols());
  parallel_chunks(rows, pol.row_chunk, pol.threads, [&](Index, Index r0, Index nr) {
    for (Index i = r0; i < r0 + nr; ++i) {
      double mu;
      double var;
      if (mode == Mode::Train) {
        mu = z.row(i).head(n).sum() / static_cast<double>(n);
        var = 0.0;
        for (Index p = 0; p < n; ++p) var += (z(i, p) - mu) * (z(i, p) - mu);
        var /= static_cast<double>(n);
      } else {
        mu = model.norm.mean[slot][i];
        var = model.norm.var[slot][i];
      }
      batch_var[i] = var;
      const double r = inverse_std(var, kNormEps);
      mean_out[i] = mu;
      rstd_out[i] = r;
      clamped_out[i] = var < kNormEps ? 1.0 : 0.0;
      for (Index p = 0; p < n; ++p) h(i, p) = gain[i] * (z(i, p) - mu) * r + shift[i];
      for (Index col = n; col < z.cols(); ++col) h(i, col) = gain[i] * r * z(i, col);
    }
  });
  if (mode == Mode::Train && running != nullptr) {
    const double m = running->momentum;
    running->mean[slot] = (1.0 - m) * running->mean[slot] + m * mean_out;
    running->var[slot] = (1.0 - m) * running->var[slot] + m * batch_var;
  }
}

void bn_backward(const Op& op, const nn::Model& model, const MatrixXd& z, const MatrixXd& g, MatrixXd& gz,
                 VectorXd& grad, Index n, Mode mode, const VectorXd& mean, const VectorXd& rstd,
                 const VectorXd& clamped, const ExecPolicy& pol) {
  const Index rows = z.rows();
  const Map<const VectorXd> gain(model.params.data() + op.gain, rows);
  const auto gain_off = static_cast<Index>(op.gain);
  const auto shift_off = static_cast<Index>(op.shift);
  gz.resize(rows, z.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_chunks(rows, pol.row_chunk, pol.threads, [&](Index, Index r0, Index nr) {
    for (Index i = r0; i < r0 + nr; ++i) {
      const double mu = mean[i];
      const double r = rstd[i];
      const double gm = gain[i];
      double sum_a = 0.0;
      double sum_ax = 0.0;
      for (Index p = 0; p < n; ++p) {
        sum_a += g(i, p);
        sum_ax += g(i, p) * (z(i, p) - mu) * r;
      }
      double sum_bz = 0.0;
      for (Index col = n; col < z.cols(); ++col) sum_bz += g(i, col) * z(i, col);
      grad[gain_off + i] += sum_ax + r * sum_bz;
      grad[shift_off + i] += sum_a;

      if (mode == Mode::Eval) {
        for (Index col = 0; col < z.cols(); ++col) gz(i, col) = gm * r * g(i, col);
        continue;
      }
      const bool is_clamped = clamped[i] != 0.0;
      const double big_r = gm * sum_bz;  // adjoint of the inverse std from derivative channels
      for (Index p = 0; p < n; ++p) {
        const double xhat = (z(i, p) - mu) * r;
        double dz = r * (gm * g(i, p) - gm * sum_a * inv_n);
        if (!is_clamped) {
          dz -= r * xhat * gm * sum_ax * inv_n;
          dz -= big_r * r * r * xhat * inv_n;
        }
        gz(i, p) = dz;
      }
      for (Index col = n; col < z.cols(); ++col) gz(i, col) = g(i, col) * gm * r;
    }
  });
}

// Layer norm ----------------------------------------------------------------

struct LnPoint {
  MatrixXd y;  // centred channels, rows x C
  double r = 0.0;
  std::vector<double> rc;  // derivative-channel jets of the inverse std
  std::vector<double> vc;  // derivative-channel jets of the variance
  bool clamped = false;
};

void ln_stats(const MatrixXd& z, Index p, Index n, const ChannelMap& cm, LnPoint& s) {
  const Index rows = z.rows();
  const double inv_w = 1.0 / static_cast<double>(rows);
  s.y.resize(rows, cm.count);
  s.rc.assign(static_cast<std::size_t>(cm.count), 0.0);
  s.vc.assign(static_cast<std::size_t>(cm.count), 0.0);
  for (int c = 0; c < cm.count; ++c) {
    const auto col = z.col(c * n + p);
    s.y.col(c) = col.array() - col.mean();
  }
  const double v = s.y.col(0).squaredNorm() * inv_w;
  for (const int c : cm.first) s.vc[c] = 2.0 * inv_w * s.y.col(0).dot(s.y.col(c));
  for (std::size_t j = 0; j < cm.second.size(); ++j) {
    const int c = cm.second[j];
    const int f = cm.partner[j];
    s.vc[c] = 2.0 * inv_w * (s.y.col(f).squaredNorm() + s.y.col(0).dot(s.y.col(c)));
  }
  s.clamped = v < kNormEps;
  s.r = inverse_std(v, kNormEps);
  if (s.clamped) return;
  const double r3 = s.r * s.r * s.r;
  const double r5 = r3 * s.r * s.r;
  for (const int c : cm.first) s.rc[c] = -0.5 * r3 * s.vc[c];
  for (std::size_t j = 0; j < cm.second.size(); ++j) {
    const int c = cm.second[j];
    const int f = cm.partner[j];
    s.rc[c] = 0.75 * r5 * s.vc[f] * s.vc[f] - 0.5 * r3 * s.vc[c];
  }
}

// Normalized channels n_c written into `out` (rows x C).
void ln_normalized(const LnPoint& s, const ChannelMap& cm, MatrixXd& out) {
  out.resize(s.y.rows(), cm.count);
  out.col(0) = s.y.col(0) * s.r;
  for (const int c : cm.first) out.col(c) = s.y.col(c) * s.r + s.y.col(0) * s.rc[c];
  for (std::size_t j = 0; j < cm.second.size(); ++j) {
    const int c = cm.second[j];
    const int f = cm.partner[j];
    out.col(c) = s.y.col(c) * s.r + 2.0 * s.y.col(f) * s.rc[f] + s.y.col(0) * s.rc[c];
  }
}

void ln_forward(const Op& op, const nn::Model& model, const MatrixXd& z, MatrixXd& h, Index n, const ChannelMap& cm,
                const ExecPolicy& pol) {
  const Index rows = z.rows();
  const Map<const VectorXd> gain(model.params.data() + op.gain, rows);
  const Map<const VectorXd> shift(model.params.data() + op.shift, rows);
  h.resize(rows, z.cols());
  parallel_chunks(n, pol.point_chunk, pol.threads, [&](Index, Index p0, Index np) {
    LnPoint s;
    MatrixXd nrm;
    for (Index p = p0; p < p0 + np; ++p) {
      ln_stats(z, p, n, cm, s);
      ln_normalized(s, cm, nrm);
      h.col(p) = gain.cwiseProduct(nrm.col(0)) + shift;
      for (int c = 1; c < cm.count; ++c) h.col(c * n + p) = gain.cwiseProduct(nrm.col(c));
    }
  });
}

void ln_backward(const Op& op, const nn::Model& model, const MatrixXd& z, const MatrixXd& g, MatrixXd& gz,
                 VectorXd& grad, Index n, const ChannelMap& cm, const ExecPolicy& pol) {
  const Index rows = z.rows();
  const double inv_w = 1.0 / static_cast<double>(rows);
  const Map<const VectorXd> gain(model.params.data() + op.gain, rows);
  gz.resize(rows, z.cols());
  const Index chunks = chunk_count(n, pol.point_chunk);
  MatrixXd partial_gain = MatrixXd::Zero(rows, chunks);
  MatrixXd partial_shift = MatrixXd::Zero(rows, chunks);
  const int count = cm.count;

  parallel_chunks(n, pol.point_chunk, pol.threads, [&](Index chunk, Index p0, Index np) {
    LnPoint s;
    MatrixXd nrm;
    MatrixXd nbar(rows, count);
    MatrixXd ybar(rows, count);
    std::vector<double> rbar_c(static_cast<std::size_t>(count));
    std::vector<double> vbar_c(static_cast<std::size_t>(count));
    for (Index p = p0; p < p0 + np; ++p) {
      ln_stats(z, p, n, cm, s);
      ln_normalized(s, cm, nrm);
      for (int c = 0; c < count; ++c) {
        const auto gc = g.col(c * n + p);
        partial_gain.col(chunk) += gc.cwiseProduct(nrm.col(c));
        nbar.col(c) = gain.cwiseProduct(gc);
      }
      partial_shift.col(chunk) += g.col(p);

      const auto& y = s.y;
      // Through n = y r, n_c = y_c r + y r_c, n_c2 = y_c2 r + 2 y_f r_f + y r_c2.
      ybar.col(0) = nbar.col(0) * s.r;
      double rbar = nbar.col(0).dot(y.col(0));
      for (const int c : cm.first) {
        ybar.col(0) += nbar.col(c) * s.rc[c];
        ybar.col(c) = nbar.col(c) * s.r;
        rbar += nbar.col(c).dot(y.col(c));
        rbar_c[c] = nbar.col(c).dot(y.col(0));
      }
      for (std::size_t j = 0; j < cm.second.size(); ++j) {
        const int c = cm.second[j];
        const int f = cm.partner[j];
        ybar.col(0) += nbar.col(c) * s.rc[c];
        ybar.col(f) += 2.0 * s.rc[f] * nbar.col(c);
        ybar.col(c) = nbar.col(c) * s.r;
        rbar += nbar.col(c).dot(y.col(c));
        rbar_c[f] += 2.0 * nbar.col(c).dot(y.col(f));
        rbar_c[c] = nbar.col(c).dot(y.col(0));
      }

      if (!s.clamped) {
        const double r = s.r;
        const double r2 = r * r;
        const double r3 = r2 * r;
        const double r4 = r2 * r2;
        const double r5 = r4 * r;
        double rbar_total = rbar;
        for (const int c : cm.first) rbar_total += rbar_c[c] * (-1.5 * r2 * s.vc[c]);
        for (std::size_t j = 0; j < cm.second.size(); ++j) {
          const int c = cm.second[j];
          const int f = cm.partner[j];
          rbar_total += rbar_c[c] * (3.75 * r4 * s.vc[f] * s.vc[f] - 1.5 * r2 * s.vc[c]);
        }
        const double vbar = -0.5 * r3 * rbar_total;
        for (const int c : cm.first) vbar_c[c] = -0.5 * r3 * rbar_c[c];
        for (std::size_t j = 0; j < cm.second.size(); ++j) {
          const int c = cm.second[j];
          const int f = cm.partner[j];
          vbar_c[f] += rbar_c[c] * 1.5 * r5 * s.vc[f];
          vbar_c[c] = -0.5 * r3 * rbar_c[c];
        }
        const double k = 2.0 * inv_w;
        ybar.col(0) += k * vbar * y.col(0);
        for (const int c : cm.first) {
          ybar.col(0) += k * vbar_c[c] * y.col(c);
          ybar.col(c) += k * vbar_c[c] * y.col(0);
        }
        for (std::size_t j = 0; j < cm.second.size(); ++j) {
          const int c = cm.second[j];
          const int f = cm.partner[j];
          ybar.col(f) += 2.0 * k * vbar_c[c] * y.col(f);
          ybar.col(0) += k * vbar_c[c] * y.col(c);
          ybar.col(c) += k * vbar_c[c] * y.col(0);
        }
      }
      for (int c = 0; c < count; ++c) {
        gz.col(c * n + p) = ybar.col(c).array() - ybar.col(c).mean();
      }
    }
  });
  Map<VectorXd> gg(grad.data() + op.gain, rows);
  Map<VectorXd> gs(grad.data() + op.shift, rows);
  for (Index c = 0; c < chunks; ++c) {
    gg += partial_gain.col(c);
    gs += partial_shift.col(c);
  }
}

std::vector<int> skip_partners(std::span<const Op> ops) {
  std::vector<int> partner(ops.size(), -1);
  std::vector<int> stack;
  for (std::size_t j = 0; j < ops.size(); ++j) {
    if (ops[j].kind == OpKind::PushSkip) stack.push_back(static_cast<int>(j));
    if (ops[j].kind == OpKind::AddSkip) {
      if (stack.empty()) throw std::logic_error("unbalanced skip connection");
      partner[j] = stack.back();
      stack.pop_back();
    }
  }
  return partner;
}

}  // namespace

MatrixXd seed_inputs(const MatrixXd& points, const ChannelSpec& spec_in) {
  const ChannelSpec spec = spec_in.closed();
  const Index n = points.cols();
  const Index d = points.rows();
  if (d != spec.input_dim) throw std::invalid_argument("seed_inputs: point dimension does not match channel spec");
  MatrixXd a = MatrixXd::Zero(d, spec.count() * n);
  a.leftCols(n) = points;
  for (int k = 0; k < spec.input_dim; ++k) {
    const int c = spec.first_index(k);
    if (c >= 0) a.block(k, c * n, 1, n).setOnes();
  }
  return a;
}

void forward(const nn::Model& model, const MatrixXd& points, const ChannelSpec& spec_in, Mode mode,
             const ExecPolicy& pol, ForwardRecord& rec, nn::NormState* running, PreActCapture* capture) {
  const ChannelSpec spec = spec_in.closed();
  const ChannelMap cm(spec);
  const Index n = points.cols();
  const auto ops = model.net.ops();
  const auto partner = skip_partners(ops);
  if (points.rows() != model.net.architecture().input_dim) {
    throw std::invalid_argument("forward: point dimension does not match the network input");
  }

  rec.spec = spec;
  rec.points = n;
  rec.mode = mode;
  rec.acts.resize(ops.size() + 1);
  rec.bn_mean.resize(ops.size());
  rec.bn_rstd.resize(ops.size());
  rec.bn_clamped.resize(ops.size());
  rec.pointwise.resize(ops.size());
  rec.acts[0] = seed_inputs(points, spec);
  if (capture != nullptr) capture->layers.assign(static_cast<std::size_t>(model.net.hidden_layers()), MatrixXd());

  for (std::size_t j = 0; j < ops.size(); ++j) {
    const Op& op = ops[j];
    const MatrixXd& in = rec.acts[j];
    MatrixXd& out = rec.acts[j + 1];
    switch (op.kind) {
      case OpKind::Dense:
        dense_forward(op, model.params, in, out, n, pol);
        if (capture != nullptr && op.capture >= 0) {
          capture->layers[static_cast<std::size_t>(op.capture)] = out.leftCols(n);
        }
        break;
      case OpKind::Pointwise:
        if (!rec.keep_pointwise) rec.pointwise[j].resize(0, 0);
        pointwise_forward(op, model, in, out, n, cm, pol, rec.keep_pointwise ? &rec.pointwise[j] : nullptr);
        break;
      case OpKind::Norm:
        if (op.norm == nn::NormKind::Batch) {
          bn_forward(op, model, in, out, n, mode, pol, rec.bn_mean[j], rec.bn_rstd[j], rec.bn_clamped[j], running);
        } else {
          ln_forward(op, model, in, out, n, cm, pol);
        }
        break;
      case OpKind::PushSkip: out = in; break;
      case OpKind::AddSkip: out = in + rec.acts[static_cast<std::size_t>(partner[j])]; break;
    }
  }
}

void backward(const nn::Model& model, const ForwardRecord& rec, const MatrixXd& output_adjoint, VectorXd& grad,
              const ExecPolicy& pol) {
  const auto ops = model.net.ops();
  if (rec.acts.size() != ops.size() + 1) throw std::invalid_argument("backward: record does not match the network");
  if (output_adjoint.rows() != rec.output().rows() || output_adjoint.cols() != rec.output().cols()) {
    throw std::invalid_argument("backward: adjoint shape does not match the output");
  }
  if (grad.size() != model.params.size()) throw std::invalid_argument("backward: gradient size mismatch");
  const ChannelMap cm(rec.spec);
  const Index n = rec.points;
  const auto partner = skip_partners(ops);
  std::vector<MatrixXd> pending(ops.size());

  MatrixXd g = output_adjoint;
  MatrixXd g_in;
  for (std::size_t jj = ops.size(); jj-- > 0;) {
    const Op& op = ops[jj];
    const MatrixXd& in = rec.acts[jj];
    switch (op.kind) {
      case OpKind::Dense:
        dense_backward(op, model.params, in, g, g_in, grad, n, pol);
        g.swap(g_in);
        break;
      case OpKind::Pointwise:
        pointwise_backward(op, in, rec.pointwise[jj], g, g_in, grad, n, cm, pol);
        g.swap(g_in);
        break;
      case OpKind::Norm:
        if (op.norm == nn::NormKind::Batch) {
          bn_backward(op, model, in, g, g_in, grad, n, rec.mode, rec.bn_mean[jj], rec.bn_rstd[jj], rec.bn_clamped[jj],
                      pol);
        } else {
          ln_backward(op, model, in, g, g_in, grad, n, cm, pol);
        }
        g.swap(g_in);
        break;
      case OpKind::AddSkip: pending[static_cast<std::size_t>(partner[jj])] = g; break;
      case OpKind::PushSkip: g += pending[jj]; break;
    }
  }
}

MatrixXd evaluate(const nn::Model& model, const MatrixXd& points, const ExecPolicy& pol, PreActCapture* capture,
                  Index block) {
  const Index n = points.cols();
  const auto width = static_cast<Index>(model.net.max_width());
  const auto ops = static_cast<Index>(model.net.ops().size()) + 1;
  // keep one forward record near 4M doubles
  block = std::clamp<Index>(std::min(block, (Index{1} << 22) / std::max<Index>(1, width * ops)), 64, 4096);
  MatrixXd out(model.net.architecture().output_dim, n);
  if (capture != nullptr) {
    capture->layers.assign(static_cast<std::size_t>(model.net.hidden_layers()), MatrixXd());
    for (auto& m : capture->layers) m.resize(model.net.architecture().width, n);
  }
  ForwardRecord rec;
  rec.keep_pointwise = false;
  PreActCapture part;
  const ChannelSpec spec = ChannelSpec::value_only(model.net.architecture().input_dim);
  for (Index b0 = 0; b0 < n; b0 += block) {
    const Index nb = std::min(block, n - b0);
    forward(model, points.middleCols(b0, nb), spec, Mode::Eval, pol, rec, nullptr,
            capture != nullptr ? &part : nullptr);
    out.middleCols(b0, nb) = rec.output();
    if (capture != nullptr) {
      for (std::size_t l = 0; l < part.layers.size(); ++l) capture->layers[l].middleCols(b0, nb) = part.layers[l];
    }
  }
  return out;
}

}  // namespace maskpinn::kernels
