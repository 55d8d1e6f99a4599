#include <string>

#include <benchmark/benchmark.h>

#include "robustkf/kf.hpp"
#include "robustkf/linalg.hpp"
#include "robustkf/mckf.hpp"
#include "robustkf/simulation.hpp"

using namespace robustkf;

namespace {

GaussianBelief initial_belief(const StateSpaceModel& model) {
  const std::size_t n = model.state_dim();
  Vector mean(n);
  for (std::size_t i = 0; i < n; ++i) mean[i] = 1.0;
  return {mean, 0.01 * Matrix::identity(n)};
}

// A moderate outlier (a few measurement standard deviations) that keeps the
// fixed-point solver iterating.
Vector outlier_measurement(const StateSpaceModel& model, const GaussianBelief& belief) {
  Vector y = model.H * (model.F * belief.mean);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.4;
  return y;
}

void BM_KfStep(benchmark::State& state) {
  const StateSpaceModel model = make_example2();
  const GaussianBelief belief = initial_belief(model);
  const Vector y = outlier_measurement(model, belief);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kf_update(model, kf_predict(model, belief), y));
  }
}
BENCHMARK(BM_KfStep);

void BM_MckfStep(benchmark::State& state) {
  const StateSpaceModel model = make_example2();
  const GaussianBelief belief = initial_belief(model);
  const Vector y = outlier_measurement(model, belief);
  const KernelConfig config{static_cast<double>(state.range(0)) / 10.0, 1e-6, 100};
  int iterations = 0;
  for (auto _ : state) {
    const MckfStep step = mckf_step(model, belief, y, config);
    iterations = step.report.iterations;
    benchmark::DoNotOptimize(step.posterior.mean);
  }
  state.counters["fixed_point_iterations"] = iterations;
  state.SetLabel("sigma=" + std::to_string(config.sigma));
}
BENCHMARK(BM_MckfStep)->Arg(2)->Arg(5)->Arg(20)->Arg(100);

void BM_Cholesky(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Matrix a = Matrix::identity(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) += 1.0 / static_cast<double>(1 + i + j);
  }
  for (auto _ : state) benchmark::DoNotOptimize(cholesky_lower(a));
}
BENCHMARK(BM_Cholesky)->DenseRange(2, 10, 4);

void BM_MonteCarlo(benchmark::State& state) {
  ExperimentConfig config;
  config.model = ModelKind::Example1;
  config.noise = NoiseCase::ImpulsiveMeasurement;
  config.runs = 4;
  config.steps = 250;
  config.threads = 1;
  FilterSpec mckf;
  mckf.kind = FilterKind::Mckf;
  config.filters = {FilterSpec{}, mckf};
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(config));
  state.SetItemsProcessed(state.iterations() * config.runs * config.steps);
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
