#pragma once

// Straight-line scalar interpretation of a network program, one point and one
// neuron at a time. With S = ad::Jet<ad::Var> and P = ad::Var it records the
// whole jet computation on a tape; it is the serial reference that the batched
// kernels are tested against. Slow by construction; keep to tiny networks.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "maskpinn/autodiff/jet.hpp"
#include "maskpinn/kernels/engine.hpp"
#include "maskpinn/nn/activation.hpp"
#include "maskpinn/nn/mask.hpp"
#include "maskpinn/nn/network.hpp"

namespace maskpinn::nn {

namespace detail {

inline double constant_part(double x) { return x; }
inline ad::Var constant_part(const ad::Var& x) { return x; }
template <class T>
ad::Jet<T> constant_part(const ad::Jet<T>& x) {
  return ad::Jet<T>(x.value);
}

template <class S>
S inverse_std(const S& var, double eps) {
  using std::sqrt;
  if (ad::primal(var) < eps) return S(eps > 0.0 ? 1.0 / std::sqrt(eps) : 0.0);
  return 1.0 / sqrt(var);
}

}  // namespace detail

/// Runs `net` on a batch of points. `inputs[p]` holds the input coordinates
/// of point p; the result holds its outputs. Batch norm uses the statistics of
/// this batch (value part only, so they are constants along input directions)
/// in Train mode and `norm` in Eval mode.
template <class S, class P>
std::vector<std::vector<S>> reference_forward(const Network& net, std::span<const P> params,
                                              const std::vector<std::vector<S>>& inputs, kernels::Mode mode,
                                              const NormState& norm) {
  using std::exp;
  const Activation act = net.architecture().activation;
  const std::size_t n = inputs.size();
  std::vector<std::vector<S>> cur = inputs;
  std::vector<std::vector<std::vector<S>>> skip;

  for (const Op& op : net.ops()) {
    switch (op.kind) {
      case OpKind::Dense: {
        std::vector<std::vector<S>> next(n, std::vector<S>(static_cast<std::size_t>(op.out)));
        for (std::size_t p = 0; p < n; ++p) {
          for (int i = 0; i < op.out; ++i) {
            S acc = S(params[op.bias + static_cast<std::size_t>(i)]);
            for (int j = 0; j < op.in; ++j) {
              const std::size_t w = op.weight + static_cast<std::size_t>(j) * static_cast<std::size_t>(op.out) +
                                    static_cast<std::size_t>(i);
              acc = acc + S(params[w]) * cur[p][static_cast<std::size_t>(j)];
            }
            next[p][static_cast<std::size_t>(i)] = acc;
          }
        }
        cur = std::move(next);
        break;
      }
      case OpKind::Pointwise: {
        for (std::size_t p = 0; p < n; ++p) {
          for (int i = 0; i < op.out; ++i) {
            S& z = cur[p][static_cast<std::size_t>(i)];
            switch (op.gate) {
              case Gate::None: z = activate(act, z); break;
              case Gate::Mask: {
                const S alpha = S(params[op.gate_param + static_cast<std::size_t>(i)]);
                z = mask_gate(z, alpha) * activate(act, z);
                break;
              }
              case Gate::Scale: z = activate(act, S(params[op.gate_param]) * z); break;
            }
          }
        }
        break;
      }
      case OpKind::Norm: {
        const auto w = static_cast<std::size_t>(op.out);
        if (op.norm == NormKind::Batch) {
          for (std::size_t i = 0; i < w; ++i) {
            S mu;
            S rstd;
            if (mode == kernels::Mode::Train) {
              if (n < 2) throw std::invalid_argument("batch norm needs a batch of at least 2 points");
              S sum = S(0.0);
              for (std::size_t p = 0; p < n; ++p) sum = sum + detail::constant_part(cur[p][i]);
              mu = sum / static_cast<double>(n);
              S var = S(0.0);
              for (std::size_t p = 0; p < n; ++p) {
                const S d = detail::constant_part(cur[p][i]) - mu;
                var = var + d * d;
              }
              rstd = detail::inverse_std(var / static_cast<double>(n), kernels::kNormEps);
            } else {
              const auto slot = static_cast<std::size_t>(op.norm_slot);
              mu = S(norm.mean[slot][static_cast<Eigen::Index>(i)]);
              rstd = detail::inverse_std(S(norm.var[slot][static_cast<Eigen::Index>(i)]), kernels::kNormEps);
            }
            const S gain = S(params[op.gain + i]);
            const S shift = S(params[op.shift + i]);
            for (std::size_t p = 0; p < n; ++p) cur[p][i] = gain * ((cur[p][i] - mu) * rstd) + shift;
          }
        } else {
          for (std::size_t p = 0; p < n; ++p) {
            S sum = S(0.0);
            for (std::size_t i = 0; i < w; ++i) sum = sum + cur[p][i];
            const S mu = sum / static_cast<double>(w);
            S var = S(0.0);
            for (std::size_t i = 0; i < w; ++i) {
              const S d = cur[p][i] - mu;
              var = var + d * d;
            }
            const S rstd = detail::inverse_std(var / static_cast<double>(w), kernels::kNormEps);
            for (std::size_t i = 0; i < w; ++i) {
              cur[p][i] = S(params[op.gain + i]) * ((cur[p][i] - mu) * rstd) + S(params[op.shift + i]);
            }
          }
        }
        break;
      }
      case OpKind::PushSkip: skip.push_back(cur); break;
      case OpKind::AddSkip: {
        const auto& saved = skip.back();
        for (std::size_t p = 0; p < n; ++p) {
          for (std::size_t i = 0; i < cur[p].size(); ++i) cur[p][i] = cur[p][i] + saved[p][i];
        }
        skip.pop_back();
        break;
      }
    }
  }
  return cur;
}

}  // namespace maskpinn::nn
