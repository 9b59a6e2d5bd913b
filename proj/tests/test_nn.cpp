#include <doctest.h>

#include <cmath>
#include <vector>

#include "maskpinn/kernels/engine.hpp"
#include "maskpinn/nn/mask.hpp"
#include "maskpinn/nn/network.hpp"
#include "maskpinn/nn/norm.hpp"
#include "maskpinn/rng.hpp"

using namespace maskpinn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

nn::Architecture arch_of(nn::Variant v, int depth, int width, nn::Activation a = nn::Activation::Tanh) {
  nn::Architecture arch;
  arch.variant = v;
  arch.depth = depth;
  arch.width = width;
  arch.activation = a;
  return arch;
}

double sigma(nn::Activation a, double z) {
  switch (a) {
    case nn::Activation::Tanh: return std::tanh(z);
    case nn::Activation::Gelu:
      return 0.5 * z * (1 + std::tanh(std::sqrt(2 / M_PI) * (z + 0.044715 * z * z * z)));
    case nn::Activation::Silu: return z / (1 + std::exp(-z));
    case nn::Activation::Softplus: return std::log1p(std::exp(z));
  }
  return 0;
}

MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double s = 1.0) {
  return MatrixXd::NullaryExpr(r, c, [&] { return rng.uniform(-s, s); });
}

}  // namespace

TEST_CASE("mask_fn closed-form values") {
  const std::vector<double> z{0.0, 1.0, 1.0};
  const std::vector<double> a{3.0, 1.0, 5.0};
  const auto f = nn::mask_fn(z, a);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(0.6321205588285577).epsilon(1e-15));
  CHECK(1.0 - f[2] == doctest::Approx(1.3887943864964021e-11).epsilon(1e-4));
  CHECK_THROWS_AS((void)nn::mask_fn(z, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("mask gate is local to its neuron") {
  std::vector<double> z{0.3, -1.2, 2.0};
  const std::vector<double> a{1.0, 0.5, 2.0};
  const auto before = nn::mask_fn(z, a);
  z[1] = 7.0;
  const auto after = nn::mask_fn(z, a);
  CHECK(before[0] == after[0]);
  CHECK(before[2] == after[2]);
}

TEST_CASE("mask block matches a straight-line forward pass") {
  Rng rng(4, 0);
  const int w = 6;
  for (const auto act : {nn::Activation::Tanh, nn::Activation::Gelu, nn::Activation::Silu, nn::Activation::Softplus}) {
    nn::MaskBlock b{random_matrix(rng, w, w), random_matrix(rng, w, w), random_matrix(rng, w, 1),
                    random_matrix(rng, w, 1), random_matrix(rng, w, 1, 2.0), random_matrix(rng, w, 1, 2.0)};
    const VectorXd h = random_matrix(rng, w, 1, 2.0);
    std::vector<double> h1(w), out(w);
    double max_sigma = 0.0;
    for (int i = 0; i < w; ++i) {
      double z = b.b1[i];
      for (int j = 0; j < w; ++j) z += b.w1(i, j) * h[j];
      h1[i] = (1 - std::exp(-(b.alpha1[i] * z) * (b.alpha1[i] * z))) * sigma(act, z);
    }
    for (int i = 0; i < w; ++i) {
      double z = b.b2[i];
      for (int j = 0; j < w; ++j) z += b.w2(i, j) * h1[j];
      max_sigma = std::max(max_sigma, std::abs(sigma(act, z)));
      out[i] = h[i] + (1 - std::exp(-(b.alpha2[i] * z) * (b.alpha2[i] * z))) * sigma(act, z);
    }
    const VectorXd got = nn::mask_block_forward(b, h, act);
    for (int i = 0; i < w; ++i) CHECK(got[i] == doctest::Approx(out[i]).epsilon(1e-12));
    // The gate can only shrink the residual branch.
    CHECK((got - h).cwiseAbs().maxCoeff() <= max_sigma);
  }
}

TEST_CASE("mask block rejects mismatched shapes") {
  nn::MaskBlock b{MatrixXd::Zero(3, 3), MatrixXd::Zero(3, 3), VectorXd::Zero(3),
                  VectorXd::Zero(3), VectorXd::Zero(2), VectorXd::Zero(3)};
  CHECK_THROWS_AS((void)nn::mask_block_forward(b, VectorXd::Zero(3), nn::Activation::Tanh), std::invalid_argument);
}

TEST_CASE("architecture validation") {
  CHECK_THROWS_AS(nn::validate(arch_of(nn::Variant::Mask, 3, 8)), std::invalid_argument);
  CHECK_THROWS_AS(nn::validate(arch_of(nn::Variant::Vanilla, 0, 8)), std::invalid_argument);
  CHECK_THROWS_AS(nn::validate(arch_of(nn::Variant::Vanilla, 2, 0)), std::invalid_argument);
  CHECK_NOTHROW(nn::validate(arch_of(nn::Variant::Mask, 4, 8)));
  CHECK(nn::parse_variant("relu") == std::nullopt);
  CHECK(nn::parse_activation("relu") == std::nullopt);
  CHECK(nn::parse_variant("bn") == nn::Variant::BatchNorm);
}

TEST_CASE("hidden layer count equals depth for every variant") {
  for (const auto v : {nn::Variant::Vanilla, nn::Variant::ResNet, nn::Variant::Mask, nn::Variant::BatchNorm,
                       nn::Variant::LayerNorm, nn::Variant::Laaf}) {
    const nn::Network net(arch_of(v, 4, 8));
    CHECK(net.hidden_layers() == 4);
  }
}

TEST_CASE("glorot bound and init determinism") {
  CHECK(nn::glorot_bound(64, 64) == doctest::Approx(0.2165).epsilon(1e-3));
  auto arch = arch_of(nn::Variant::Mask, 2, 64);
  arch.alpha_init = 5.0;
  const nn::Model a = nn::make_model(arch, 11);
  const nn::Model b = nn::make_model(arch, 11);
  CHECK((a.params.array() == b.params.array()).all());
  for (const auto& g : a.net.groups()) {
    const auto seg = a.params.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.size));
    switch (g.role) {
      case nn::ParamRole::Weight:
        CHECK(seg.cwiseAbs().maxCoeff() <= nn::glorot_bound(g.fan_in, g.fan_out));
        break;
      case nn::ParamRole::Alpha: CHECK((seg.array() == 5.0).all()); break;
      case nn::ParamRole::Bias: CHECK((seg.array() == 0.0).all()); break;
      default: break;
    }
  }
  const nn::Model c = nn::make_model(arch, 12);
  CHECK_FALSE((a.params.array() == c.params.array()).all());
}

TEST_CASE("zero network outputs zero") {
  nn::Model m(arch_of(nn::Variant::Vanilla, 3, 8));
  const MatrixXd x = MatrixXd::Random(2, 5);
  CHECK(kernels::evaluate(m, x, {}).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-layer tanh network by hand") {
  nn::Model m(arch_of(nn::Variant::Vanilla, 2, 2));
  const auto ops = m.net.ops();
  // ops: dense 2->2, tanh, dense 2->2, tanh, dense 2->1
  auto set_dense = [&](const nn::Op& op, std::vector<double> w, std::vector<double> b) {
    for (std::size_t k = 0; k < w.size(); ++k) m.params[static_cast<Eigen::Index>(op.weight + k)] = w[k];
    for (std::size_t k = 0; k < b.size(); ++k) m.params[static_cast<Eigen::Index>(op.bias + k)] = b[k];
  };
  // column-major out x in: {w00, w10, w01, w11}
  set_dense(ops[0], {0.5, -0.3, 0.2, 0.8}, {0.1, -0.2});
  set_dense(ops[2], {1.0, 0.4, -0.6, 0.3}, {0.0, 0.05});
  set_dense(ops[4], {0.7, -1.1}, {0.25});
  const double x = 0.3, t = -0.4;
  const double a0 = std::tanh(0.5 * x + 0.2 * t + 0.1);
  const double a1 = std::tanh(-0.3 * x + 0.8 * t - 0.2);
  const double b0 = std::tanh(1.0 * a0 - 0.6 * a1);
  const double b1 = std::tanh(0.4 * a0 + 0.3 * a1 + 0.05);
  const double expected = 0.7 * b0 - 1.1 * b1 + 0.25;
  MatrixXd pt(2, 1);
  pt << x, t;
  CHECK(kernels::evaluate(m, pt, {})(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mask network with alpha = 0 reduces to head after stem") {
  nn::Model m = nn::make_model(arch_of(nn::Variant::Mask, 4, 8, nn::Activation::Silu), 3);
  for (const auto& g : m.net.groups()) {
    if (g.role == nn::ParamRole::Alpha) {
      m.params.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.size)).setZero();
    }
  }
  const auto ops = m.net.ops();
  const nn::Op& stem = ops.front();
  const nn::Op& head = ops.back();
  auto apply = [&](const nn::Op& op, const VectorXd& v) {
    const Eigen::Map<const MatrixXd> w(m.params.data() + op.weight, op.out, op.in);
    return VectorXd(w * v + m.params.segment(static_cast<Eigen::Index>(op.bias), op.out));
  };
  const MatrixXd x = MatrixXd::Random(2, 6);
  const MatrixXd got = kernels::evaluate(m, x, {});
  for (Eigen::Index p = 0; p < x.cols(); ++p) {
    const VectorXd expected = apply(head, apply(stem, x.col(p)));
    CHECK(got(0, p) == doctest::Approx(expected[0]).epsilon(1e-14));
  }
}

TEST_CASE("norm_forward batch example") {
  MatrixXd z(1, 3);
  z << 1, 2, 3;
  const MatrixXd out = nn::norm_forward(nn::NormKind::Batch, z, VectorXd::Ones(1), VectorXd::Zero(1), 0.0);
  CHECK(out(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.0));
  CHECK(out(0, 2) == doctest::Approx(1.224744871391589).epsilon(1e-12));
}

TEST_CASE("norm_forward constant batch, zero gain, layer statistics") {
  const MatrixXd c = MatrixXd::Constant(2, 4, 3.5);
  CHECK(nn::norm_forward(nn::NormKind::Batch, c, VectorXd::Ones(2), VectorXd::Zero(2), 0.0).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(nn::norm_forward(nn::NormKind::Batch, c, VectorXd::Ones(2), VectorXd::Zero(2), 1e-5).cwiseAbs().maxCoeff() ==
        0.0);
  const MatrixXd r = MatrixXd::Random(3, 4);
  VectorXd shift(3);
  shift << 0.5, -1.0, 2.0;
  const MatrixXd g0 = nn::norm_forward(nn::NormKind::Batch, r, VectorXd::Zero(3), shift, 1e-5);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK((g0.col(j) - shift).cwiseAbs().maxCoeff() == 0.0);
  const MatrixXd ln = nn::norm_forward(nn::NormKind::Layer, r, VectorXd::Ones(3), VectorXd::Zero(3), 0.0);
  for (Eigen::Index j = 0; j < 4; ++j) {
    CHECK(std::abs(ln.col(j).mean()) < 1e-14);
    CHECK((ln.col(j).array().square().mean()) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)nn::norm_forward(nn::NormKind::Batch, MatrixXd::Zero(2, 1), VectorXd::Ones(2),
                                         VectorXd::Zero(2), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)nn::norm_forward(nn::NormKind::Layer, MatrixXd::Zero(1, 4), VectorXd::Ones(1),
                                         VectorXd::Zero(1), 0.0),
                  std::invalid_argument);
}
