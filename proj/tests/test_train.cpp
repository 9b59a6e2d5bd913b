#include <doctest.h>

#include <cmath>
#include <numbers>

#include "maskpinn/autodiff/tape.hpp"
#include "maskpinn/train/adam.hpp"
#include "maskpinn/train/trainer.hpp"

using namespace maskpinn;

namespace {

nn::Architecture small(nn::Variant v, int depth = 2, int width = 8) {
  nn::Architecture a;
  a.variant = v;
  a.depth = depth;
  a.width = width;
  return a;
}

train::TrainConfig quick(int iterations) {
  train::TrainConfig c;
  c.iterations = iterations;
  c.counts = {64, 16, 16};
  c.log_every = 10;
  c.eval_grid = {11, 11};
  c.probe_size = 32;
  c.record_time = false;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("adam matches a scalar recurrence") {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  train::AdamState st(3);
  double m = 0.0, v = 0.0, ref = 0.0;
  const double g[] = {1.0, -0.5, 2.0, 0.25};
  for (int t = 1; t <= 4; ++t) {
    const Eigen::VectorXd grad = Eigen::VectorXd::Constant(3, g[t - 1]);
    train::adam_step(theta, grad, st, 1e-3);
    m = 0.9 * m + 0.1 * g[t - 1];
    v = 0.999 * v + 0.001 * g[t - 1] * g[t - 1];
    ref -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    if (t == 1) CHECK(theta[0] == doctest::Approx(-9.99999990e-4).epsilon(1e-9));
    CHECK(theta[1] == doctest::Approx(ref).epsilon(1e-14));
  }
  CHECK(st.step == 4);
  CHECK((st.v.array() >= 0.0).all());
}

TEST_CASE("adam edge cases") {
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(2, 0.5);
  train::AdamState st(2);
  train::adam_step(theta, Eigen::VectorXd::Zero(2), st, 1e-2);
  CHECK((theta.array() == 0.5).all());

  Eigen::VectorXd bad(2);
  bad << 1.0, std::nan("");
  train::AdamState before = st;
  CHECK_THROWS_AS(train::adam_step(theta, bad, st, 1e-2), ad::NonFiniteError);
  CHECK(st.step == before.step);
  CHECK((theta.array() == 0.5).all());
  CHECK_THROWS_AS(train::adam_step(theta, Eigen::VectorXd::Zero(3), st, 1e-2), std::invalid_argument);
}

TEST_CASE("loss of the zero network equals hand sums over the samples") {
  const pde::Problem heat(pde::ProblemKind::Heat, {});
  const auto s = pde::sample_points(heat, {20, 13, 7}, 11);
  nn::Model m = nn::make_model(small(nn::Variant::Vanilla), 1);
  m.params.setZero();
  double ic = 0.0;
  for (Eigen::Index i = 0; i < s.initial.cols(); ++i) ic += std::pow(std::sin(std::numbers::pi * s.initial(0, i)), 2);
  ic /= static_cast<double>(s.initial.cols());
  const auto l = train::total_loss(m, heat, s, {2.0, 1.0, 1.0});
  CHECK(l.ic == doctest::Approx(ic).epsilon(1e-13));
  CHECK(l.bc == 0.0);
  CHECK(l.r == 0.0);
  CHECK(l.total == doctest::Approx(2.0 * ic).epsilon(1e-13));

  const pde::Problem helm(pde::ProblemKind::Helmholtz, {});
  const auto h = pde::sample_points(helm, {30, 1, 5}, 12);
  double r = 0.0;
  for (Eigen::Index i = 0; i < h.collocation.cols(); ++i) r += std::pow(helm.source(h.collocation(0, i), h.collocation(1, i)), 2);
  r /= static_cast<double>(h.collocation.cols());
  const auto lh = train::total_loss(m, helm, h, {});
  CHECK(lh.r == doctest::Approx(r).epsilon(1e-13));
  CHECK(lh.ic == 0.0);
}

TEST_CASE("a single initial point with unit mismatch") {
  // u = 0 against sin(pi x) at x = 1/6 gives a squared violation of 1/4.
  const pde::Problem heat(pde::ProblemKind::Heat, {});
  auto s = pde::sample_points(heat, {1, 1, 1}, 1);
  s.initial(0, 0) = 1.0 / 6.0;
  s.initial_target[0] = heat.initial_value(1.0 / 6.0);
  nn::Model m = nn::make_model(small(nn::Variant::Vanilla), 1);
  m.params.setZero();
  CHECK(train::total_loss(m, heat, s, {}).ic == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("zero interior weight ignores interior points") {
  const pde::Problem p(pde::ProblemKind::Wave, {});
  auto s = pde::sample_points(p, {40, 10, 10}, 2);
  const nn::Model m = nn::make_model(small(nn::Variant::Mask, 2, 8), 4);
  const train::LossWeights w{1.0, 1.0, 0.0};
  Eigen::VectorXd g1, g2;
  const auto a = train::total_loss(m, p, s, w, &g1);
  s.collocation.setRandom();
  const auto b = train::total_loss(m, p, s, w, &g2);
  CHECK(a.total == b.total);
  CHECK((g1.array() == g2.array()).all());
}

TEST_CASE("zero iterations returns the initial model and one row") {
  const auto arch = small(nn::Variant::Vanilla);
  const auto res = train::train(pde::Problem(pde::ProblemKind::Heat, {}), arch, quick(0));
  CHECK(res.metrics.rows.size() == 1);
  CHECK(res.metrics.rows[0].iter == 0);
  CHECK((res.model.params.array() == nn::make_model(arch, 3).params.array()).all());
  CHECK(res.status == train::RunStatus::Converged);
}

TEST_CASE("log rows land on the schedule and the loss falls") {
  const auto res = train::train(pde::Problem(pde::ProblemKind::Heat, {}), small(nn::Variant::Mask, 2, 16), quick(45));
  std::vector<int> iters;
  for (const auto& r : res.metrics.rows) iters.push_back(r.iter);
  CHECK(iters == std::vector<int>{0, 10, 20, 30, 40, 45});
  CHECK(res.metrics.rows.back().loss_total < res.metrics.rows.front().loss_total);
  for (const auto& r : res.metrics.rows) {
    CHECK(r.wall_ms == 0.0);
    CHECK(r.loss_total == doctest::Approx(r.loss_ic + r.loss_bc + r.loss_r).epsilon(1e-12));
  }
  const int layers = res.model.net.hidden_layers();
  CHECK(res.preact.rows.size() == static_cast<std::size_t>(6 * layers));
}

TEST_CASE("training is reproducible") {
  const pde::Problem p(pde::ProblemKind::Convection, {});
  const auto a = train::train(p, small(nn::Variant::LayerNorm), quick(20));
  const auto b = train::train(p, small(nn::Variant::LayerNorm), quick(20));
  REQUIRE(a.metrics.rows.size() == b.metrics.rows.size());
  for (std::size_t i = 0; i < a.metrics.rows.size(); ++i) {
    CHECK(a.metrics.rows[i].loss_total == b.metrics.rows[i].loss_total);
    CHECK(a.metrics.rows[i].rel_l2 == b.metrics.rows[i].rel_l2);
  }
  CHECK((a.model.params.array() == b.model.params.array()).all());
}

TEST_CASE("divergence stops the run and keeps the partial log") {
  auto cfg = quick(30);
  cfg.lr = 1e300;
  const auto res = train::train(pde::Problem(pde::ProblemKind::Heat, {}), small(nn::Variant::Vanilla), cfg);
  CHECK(res.status == train::RunStatus::Diverged);
  CHECK(res.diverged_at >= 1);
  CHECK_FALSE(res.metrics.rows.empty());
  CHECK(std::isnan(res.final_rel_l2()));
  CHECK_FALSE(res.note.empty());
}

TEST_CASE("config validation names the field") {
  auto cfg = quick(10);
  cfg.log_every = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("log_every"), std::invalid_argument);
  cfg = quick(10);
  cfg.lambda = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = quick(10);
  cfg.lr = -1.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("lr"), std::invalid_argument);
}
