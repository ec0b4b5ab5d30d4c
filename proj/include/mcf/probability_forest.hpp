#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "mcf/dataset.hpp"
#include "mcf/forest_config.hpp"
#include "mcf/tree.hpp"

namespace mcf {

/// Classification forest whose node payload is the weighted share of label 1.
struct ProbabilityForest {
  std::vector<Tree<double>> trees;
  std::size_t num_covariates = 0;
  ForestConfig config;
};

/// Weighted-Gini forest. Each tree is grown on an independent subsample drawn
/// without replacement from the rows with positive weight. Throws when only one
/// class carries positive weight, on dimension mismatch, or when mtry > p.
ProbabilityForest fit_classification_forest(const Matrix& x, std::span<const std::uint8_t> labels,
                                            const ObservationWeights& weights,
                                            const ForestConfig& config);

/// Mean leaf payload across trees.
double predict_probability(const ProbabilityForest& model, std::span<const double> x);

/// Batch prediction, parallel over rows.
std::vector<double> predict_probability(const ProbabilityForest& model, const Matrix& x,
                                        int num_threads = 0);

void dump_forest(std::ostream& out, const ProbabilityForest& model);

}  // namespace mcf
