// Serial reference path (one thread) against the OpenMP kernels.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "mcf/causal_forest.hpp"
#include "mcf/mcf.hpp"
#include "mcf/probability_forest.hpp"
#include "mcf/simgen.hpp"

namespace {

const mcf::GeneratedPair& sample_pair() {
  static const mcf::GeneratedPair pair = mcf::generate_pair(
      mcf::scenario_from_tables(mcf::Heterogeneity::High, mcf::Magnitude::High, 0.2,
                                mcf::PropensityRegime::Different),
      7);
  return pair;
}

int threads_for(const benchmark::State& state) {
  return state.range(0) == 0 ? 1 : omp_get_max_threads();
}

void BM_FitCausalForest(benchmark::State& state) {
  const auto& data = sample_pair().primary;
  mcf::ForestConfig config;
  config.num_trees = 200;
  config.num_threads = threads_for(state);
  for (auto _ : state) {
    auto model = mcf::fit_causal_forest(data, mcf::ObservationWeights::uniform(data.size()), config);
    benchmark::DoNotOptimize(model.trees.data());
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_FitCausalForest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FitClassificationForest(benchmark::State& state) {
  const auto& data = sample_pair().primary;
  mcf::ForestConfig config;
  config.num_trees = 200;
  config.num_threads = threads_for(state);
  for (auto _ : state) {
    auto model = mcf::fit_classification_forest(
        data.x(), data.z(), mcf::ObservationWeights::uniform(data.size()), config);
    benchmark::DoNotOptimize(model.trees.data());
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_FitClassificationForest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictCate(benchmark::State& state) {
  const auto& data = sample_pair().primary;
  mcf::ForestConfig config;
  config.num_trees = 500;
  static const auto model =
      mcf::fit_causal_forest(data, mcf::ObservationWeights::uniform(data.size()), config);
  const int threads = threads_for(state);
  for (auto _ : state) {
    auto tau = mcf::predict_cate(model, sample_pair().auxiliary.x(), threads);
    benchmark::DoNotOptimize(tau.data());
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_PredictCate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FitMcf(benchmark::State& state) {
  const auto& pair = sample_pair();
  mcf::McfOptions options;
  options.causal.num_trees = 100;
  options.propensity.num_trees = 100;
  options.num_threads = threads_for(state);
  for (auto _ : state) {
    auto fit = mcf::fit_mcf(pair.primary, pair.auxiliary, options);
    benchmark::DoNotOptimize(fit.rho);
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_FitMcf)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
