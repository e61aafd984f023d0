// Serial reference against the OpenMP kernel for the hot paths.
// Range argument 0 is serial, 1 is parallel.

#include <benchmark/benchmark.h>

#include "ncc/estimators.hpp"
#include "ncc/operators.hpp"
#include "ncc/rng.hpp"
#include "ncc/sampler.hpp"

using namespace ncc;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

ModelConfig config() {
  ModelConfig c;
  c.covariate = CovariateLaw::standard_normal();
  c.group_size = GroupSizeDistribution::uniform_on({3, 4, 5});
  c.m = 2;
  c.theta = 0.3;
  return c;
}

const QuadratureScheme& scheme() {
  static const QuadratureScheme s(config());
  return s;
}

const SigmaFunction& sigma() {
  static const SigmaFunction mu = [] {
    RngStream rng(5, 0);
    return random_sigma_function(scheme(), rng);
  }();
  return mu;
}

void BM_simulate_dataset(benchmark::State& state) {
  const ModelConfig c = config();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_dataset(c, 20000, 1, 0, exec_of(state)));
}

void BM_score_and_information(benchmark::State& state) {
  const Dataset d = simulate_dataset(config(), 50000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(score_and_information(d, 0.3, exec_of(state)));
}

void BM_sigma_inner(benchmark::State& state) {
  const SigmaFunction& mu = sigma();
  for (auto _ : state) benchmark::DoNotOptimize(sigma_inner(mu, mu, exec_of(state)));
}

void BM_adjoint_A(benchmark::State& state) {
  const SigmaFunction& mu = sigma();
  for (auto _ : state) benchmark::DoNotOptimize(adjoint_A(mu, exec_of(state)));
}

void BM_adjoint_B(benchmark::State& state) {
  const SigmaFunction& mu = sigma();
  for (auto _ : state) benchmark::DoNotOptimize(adjoint_B(mu, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_simulate_dataset)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score_and_information)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sigma_inner)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_adjoint_A)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_adjoint_B)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
