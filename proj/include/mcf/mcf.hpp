#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcf/causal_forest.hpp"
#include "mcf/dataset.hpp"
#include "mcf/forest_config.hpp"
#include "mcf/probability_forest.hpp"

namespace mcf {

/// The six CATE estimators compared throughout the study.
enum class EstimatorKind {
  Primary,   // training rows only
  AuxOnly,   // auxiliary rows only
  Combined,  // training + auxiliary, unit weights
  AuxPS,     // auxiliary rows weighted by the propensity weight w_i
  AuxCorr,   // auxiliary rows weighted by the correlation weight rho
  MCF,       // auxiliary rows weighted by w_i * rho
};

inline constexpr std::array<EstimatorKind, 6> kAllEstimators = {
    EstimatorKind::Primary, EstimatorKind::AuxOnly, EstimatorKind::Combined,
    EstimatorKind::AuxPS,   EstimatorKind::AuxCorr, EstimatorKind::MCF};

std::string_view to_string(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator(std::string_view name);

/// w_i = z_i * pi_i + (1 - z_i) * (1 - pi_i): the probability, under the
/// primary study's assignment model, of the arm row i actually received.
ObservationWeights propensity_weights(std::span<const double> pi_hat,
                                      std::span<const std::uint8_t> z);

/// |Pearson correlation|, defined as 0 when either vector has zero variance.
double correlation_weight(std::span<const double> tau_a, std::span<const double> tau_b);

struct McfOptions {
  ForestConfig causal = ForestConfig::causal_defaults();
  ForestConfig propensity = ForestConfig::propensity_defaults();
  double propensity_clamp_low = 0.01;
  double propensity_clamp_high = 0.99;
  /// Use out-of-bag predictions on the training rows when computing rho.
  bool oob_correlation = false;
  /// Master seed; every forest gets its own derived sub-stream.
  std::uint64_t seed = 42;
  int num_threads = 0;
};

struct McfFit {
  double rho = 0.0;
  ProbabilityForest pi_model;
  /// Propensity weight of every auxiliary row.
  ObservationWeights aux_weights;
  /// aux_weights scaled by rho; the auxiliary weights used by the MCF forest.
  ObservationWeights final_aux_weights;
  std::map<EstimatorKind, CausalForestModel> models;
  std::vector<std::string> diagnostics;
  std::size_t num_train = 0;
  std::size_t num_aux = 0;
};

/// Sub-stream seed of the forest fitted for `kind` (propensity forest: nullopt).
std::uint64_t estimator_seed(std::uint64_t master, std::optional<EstimatorKind> kind);

/// Auxiliary-row weights used by each borrowing variant.
std::vector<double> variant_aux_weights(EstimatorKind kind, const McfFit& fit);

/// Fits all six forests. The training-only and pooled forests double as the
/// two models whose in-sample CATEs define rho.
McfFit fit_mcf(const StudyDataset& train, const StudyDataset& aux, const McfOptions& options);

std::map<EstimatorKind, std::vector<double>> predict_all(const McfFit& fit,
                                                         const StudyDataset& test,
                                                         int num_threads = 0);

/// key = value block: rho, weight quantiles, forest settings.
std::string summarize(const McfFit& fit);

}  // namespace mcf
