#include "mcf/harness.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mcf/parallel.hpp"
#include "mcf/stats.hpp"

namespace mcf {

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("rmse: length mismatch");
  if (predicted.empty()) throw std::invalid_argument("rmse: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

HarnessOptions HarnessOptions::full_scale() {
  HarnessOptions o;
  o.mcf.propensity.num_trees = 500;
  o.mcf.causal.num_trees = 2000;
  return o;
}

HarnessOptions HarnessOptions::desk_scale() {
  HarnessOptions o;
  o.mcf.propensity.num_trees = 200;
  o.mcf.causal.num_trees = 500;
  return o;
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t scenario_index,
                               std::size_t rep) {
  // mix64 is a bijection, so distinct packed words give distinct seeds.
  const std::uint64_t packed = (static_cast<std::uint64_t>(scenario_index) << 32) |
                               static_cast<std::uint64_t>(rep & 0xffffffffULL);
  return mix64(mix64(master_seed) + packed);
}

ReplicationResult run_replication(const SimScenario& scenario, std::uint64_t seed,
                                  const HarnessOptions& options) {
  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  ReplicationResult result;
  result.scenario_id = scenario.name;
  result.seed = seed;
  try {
    const auto t0 = Clock::now();
    const GeneratedPair pair = generate_pair(scenario, derive_seed(seed, {1}));
    const TrainTestSplit split =
        split_train_test(pair.primary, SplitSpec{options.train_fraction, derive_seed(seed, {2})});
    const auto t1 = Clock::now();

    McfOptions mcf_options = options.mcf;
    mcf_options.seed = derive_seed(seed, {3});
    const McfFit fit = fit_mcf(split.train, pair.auxiliary, mcf_options);
    const auto t2 = Clock::now();

    const auto predictions = predict_all(fit, split.test, mcf_options.num_threads);
    const auto& truth = *split.test.tau_true();
    for (const auto& [kind, tau_hat] : predictions) result.rmse[kind] = rmse(tau_hat, truth);
    const auto t3 = Clock::now();

    result.rho = fit.rho;
    result.fit_summary = summarize(fit);
    result.wall_time = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
  } catch (const std::exception& e) {
    result.rmse.clear();
    result.error = e.what();
  }
  return result;
}

EstimatorSummary EstimatorSummary::from_sample(std::vector<double> sample) {
  EstimatorSummary s;
  s.sample = std::move(sample);
  if (s.sample.empty()) return s;
  std::vector<double> sorted = s.sample;
  std::sort(sorted.begin(), sorted.end());
  s.mean = mcf::mean(s.sample);
  s.median = quantile_sorted(sorted, 0.5);
  s.q1 = quantile_sorted(sorted, 0.25);
  s.q3 = quantile_sorted(sorted, 0.75);
  s.min = sorted.front();
  s.max = sorted.back();
  return s;
}

StudySummary summarize_results(std::vector<ReplicationResult> results,
                               const std::vector<SimScenario>& scenarios) {
  StudySummary summary;
  std::map<std::string, std::size_t> index;
  std::vector<std::map<EstimatorKind, std::vector<double>>> samples;
  for (const auto& r : results) {
    auto [it, inserted] = index.try_emplace(r.scenario_id, summary.scenarios.size());
    if (inserted) {
      ScenarioSummary s;
      s.id = r.scenario_id;
      for (const auto& scenario : scenarios) {
        if (scenario.name == r.scenario_id) s.scenario = scenario;
      }
      summary.scenarios.push_back(std::move(s));
      samples.emplace_back();
    }
    ScenarioSummary& s = summary.scenarios[it->second];
    ++s.replications;
    if (!r.ok()) {
      ++s.failures;
      continue;
    }
    s.rho.push_back(r.rho);
    for (const auto& [kind, value] : r.rmse) samples[it->second][kind].push_back(value);
  }
  for (std::size_t i = 0; i < summary.scenarios.size(); ++i) {
    for (auto& [kind, sample] : samples[i]) {
      summary.scenarios[i].estimators[kind] = EstimatorSummary::from_sample(std::move(sample));
    }
    summary.reps_per_scenario =
        std::max(summary.reps_per_scenario, summary.scenarios[i].replications);
  }
  summary.results = std::move(results);
  return summary;
}

StudySummary run_study(const std::vector<SimScenario>& scenarios, std::size_t n_reps,
                       std::uint64_t master_seed, int parallelism,
                       const HarnessOptions& options) {
  if (n_reps == 0) throw std::invalid_argument("run_study: n_reps must be at least 1");
  std::vector<ReplicationResult> results(scenarios.size() * n_reps);
  // One replication per task. Forests inside a concurrent task see
  // omp_in_parallel() and run serially.
  parallel_for(results.size(), parallelism, [&](std::size_t task) {
    const std::size_t s = task / n_reps;
    const std::size_t rep = task % n_reps;
    results[task] = run_replication(scenarios[s], replication_seed(master_seed, s, rep), options);
    results[task].rep = rep;
  });
  StudySummary summary = summarize_results(std::move(results), scenarios);
  summary.reps_per_scenario = n_reps;
  return summary;
}

}  // namespace mcf
