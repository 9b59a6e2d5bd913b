// Serial scalar reference against the batched OpenMP engine on the same loss.

#include <benchmark/benchmark.h>

#include "maskpinn/pde/sampling.hpp"
#include "maskpinn/train/loss.hpp"

using namespace maskpinn;

namespace {

struct Fixture {
  pde::Problem problem{pde::ProblemKind::Wave, {}};
  pde::SampleSet samples;
  nn::Model model;

  Fixture(nn::Variant v, int width, int points)
      : samples(pde::sample_points(problem, {points, points / 4, points / 4}, 1)), model([&] {
          nn::Architecture a;
          a.variant = v;
          a.depth = 4;
          a.width = width;
          return nn::make_model(a, 1);
        }()) {}
};

void BM_Reference(benchmark::State& state) {
  Fixture f(static_cast<nn::Variant>(state.range(0)), static_cast<int>(state.range(1)), static_cast<int>(state.range(2)));
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(train::reference_loss(f.model, f.problem, f.samples, {}, &grad).total);
  state.SetItemsProcessed(state.iterations() * state.range(2));
}

void BM_Batched(benchmark::State& state) {
  Fixture f(static_cast<nn::Variant>(state.range(0)), static_cast<int>(state.range(1)), static_cast<int>(state.range(2)));
  kernels::ExecPolicy policy;
  policy.threads = static_cast<int>(state.range(3));
  train::LossEvaluator loss(f.problem, f.samples, {}, policy);
  Eigen::VectorXd grad;
  for (auto _ : state) benchmark::DoNotOptimize(loss.evaluate(f.model, &grad).total);
  state.SetItemsProcessed(state.iterations() * state.range(2));
}

void batched_args(benchmark::internal::Benchmark* b) {
  for (const int v : {0, 2}) {
    for (const int w : {16, 64}) {
      for (const int t : {1, 2, 4}) b->Args({v, w, 256, t});
    }
  }
  b->Args({2, 256, 2048, 1})->Args({2, 256, 2048, 4});
}

}  // namespace

// The reference tape grows quadratically with width, so it stays small.
BENCHMARK(BM_Reference)->Args({0, 16, 256})->Args({2, 16, 256})->Args({0, 64, 256})->Args({2, 64, 256})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Batched)->Apply(batched_args)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
