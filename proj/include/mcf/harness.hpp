#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcf/mcf.hpp"
#include "mcf/simgen.hpp"

namespace mcf {

/// sqrt(mean((a - b)^2)). Throws on empty input or length mismatch.
double rmse(std::span<const double> predicted, std::span<const double> truth);

struct PhaseTimes {
  double generate_seconds = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct ReplicationResult {
  std::string scenario_id;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double rho = 0.0;
  std::map<EstimatorKind, double> rmse;
  PhaseTimes wall_time;
  /// Set when the replication failed; rmse is then empty.
  std::optional<std::string> error;
  std::string fit_summary;

  bool ok() const { return !error.has_value(); }
};

struct HarnessOptions {
  McfOptions mcf;
  double train_fraction = 0.5;

  /// 500 propensity trees / 2000 causal trees.
  static HarnessOptions full_scale();
  /// 200 propensity trees / 500 causal trees.
  static HarnessOptions desk_scale();
};

/// Seed of replication `rep` of scenario number `scenario_index`. Injective in
/// (scenario_index, rep) for a fixed master seed while both stay below 2^32.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t scenario_index,
                               std::size_t rep);

/// generate -> split primary -> fit on train + aux -> RMSE on the test half.
/// Errors are captured in the result, never thrown.
ReplicationResult run_replication(const SimScenario& scenario, std::uint64_t seed,
                                  const HarnessOptions& options);

struct EstimatorSummary {
  std::vector<double> sample;  // in replication order
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;

  static EstimatorSummary from_sample(std::vector<double> sample);
};

struct ScenarioSummary {
  std::string id;
  std::optional<SimScenario> scenario;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<double> rho;
  std::map<EstimatorKind, EstimatorSummary> estimators;
};

struct StudySummary {
  std::size_t reps_per_scenario = 0;
  std::vector<ScenarioSummary> scenarios;
  /// Every replication, ordered by (scenario, rep).
  std::vector<ReplicationResult> results;
};

/// Aggregates replications grouped by scenario id, in first-appearance order.
StudySummary summarize_results(std::vector<ReplicationResult> results,
                               const std::vector<SimScenario>& scenarios = {});

/// n_reps replications per scenario, run concurrently on up to `parallelism`
/// threads. Output does not depend on the thread count.
StudySummary run_study(const std::vector<SimScenario>& scenarios, std::size_t n_reps,
                       std::uint64_t master_seed, int parallelism,
                       const HarnessOptions& options);

}  // namespace mcf
