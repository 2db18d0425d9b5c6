#include <benchmark/benchmark.h>

#include "bisurv/fit.hpp"
#include "bisurv/objective.hpp"
#include "bisurv/simulate.hpp"
#include "bisurv/splines.hpp"

using namespace bisurv;

namespace {

Dataset default_data(int n) {
  ScenarioSpec spec;
  spec.n = n;
  Rng rng(1);
  return generate_dataset(spec, 1.0, rng);
}

void BM_IndexFunction(benchmark::State& state) {
  const SplineConfig cfg{static_cast<int>(state.range(0)), {-0.5, 0.0, 0.5}, -1.7, 1.7};
  const SplineBasis basis(cfg);
  const IndexFunction psi(basis, Eigen::VectorXd::Ones(basis.dimension()));
  double u = -1.6, acc = 0.0;
  for (auto _ : state) {
    acc += psi.value(u);
    u = u > 1.6 ? -1.6 : u + 0.01;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_IndexFunction)->Arg(2)->Arg(3)->Arg(5);

void BM_TotalLoglik(benchmark::State& state) {
  const Dataset data = default_data(static_cast<int>(state.range(0)));
  const FitSetup setup = prepare_fit(data);
  const SingleIndexModel model(data, setup.cuts, setup.spline);
  const Eigen::VectorXd theta = model.layout().flatten(initialize(data, setup));
  for (auto _ : state) benchmark::DoNotOptimize(model.total(theta));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TotalLoglik)->Arg(80)->Arg(200)->Arg(1000);

void BM_ScoreMatrix(benchmark::State& state) {
  const Dataset data = default_data(200);
  const FitSetup setup = prepare_fit(data);
  const SingleIndexModel model(data, setup.cuts, setup.spline);
  const Eigen::VectorXd theta = model.layout().flatten(initialize(data, setup));
  for (auto _ : state) benchmark::DoNotOptimize(score_per_cluster(model, theta));
}
BENCHMARK(BM_ScoreMatrix)->Unit(benchmark::kMillisecond);

void BM_FitModel(benchmark::State& state) {
  const Dataset data = default_data(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_model(data).result.loglik);
}
BENCHMARK(BM_FitModel)->Arg(80)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
