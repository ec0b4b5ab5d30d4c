#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "mcf/dataset.hpp"
#include "mcf/forest_config.hpp"
#include "mcf/random.hpp"
#include "mcf/tree.hpp"

namespace mcf {

/// Weighted difference in means between treated and control rows.
/// Returns nullopt when either arm has zero total weight.
std::optional<double> leaf_estimate(std::span<const double> y, std::span<const std::uint8_t> z,
                                    std::span<const double> w);

/// Per-arm weighted sufficient statistics of a node.
struct ArmStats {
  double w1 = 0.0;
  double w1_sq = 0.0;
  double w1_y = 0.0;
  double w0 = 0.0;
  double w0_sq = 0.0;
  double w0_y = 0.0;

  void add(double y, std::uint8_t z, double w) {
    if (z) {
      w1 += w;
      w1_sq += w * w;
      w1_y += w * y;
    } else {
      w0 += w;
      w0_sq += w * w;
      w0_y += w * y;
    }
  }
  double mass() const { return w1 + w0; }
  bool estimable() const { return w1 > 0.0 && w0 > 0.0; }
  double tau() const { return w1_y / w1 - w0_y / w0; }
  double treated_size() const;
  double control_size() const;

  friend ArmStats operator-(const ArmStats& a, const ArmStats& b) {
    return {a.w1 - b.w1, a.w1_sq - b.w1_sq, a.w1_y - b.w1_y,
            a.w0 - b.w0, a.w0_sq - b.w0_sq, a.w0_y - b.w0_y};
  }
};

/// Heterogeneity score of a candidate split:
///   sum over children c of mass_c * (tau_c - tau_parent)^2.
/// Returns -infinity when either child is missing an arm or has an arm whose
/// effective size is below `min_arm_size`.
double split_score(const ArmStats& left, const ArmStats& right, const ArmStats& parent,
                   double min_arm_size);

struct CausalLeaf {
  double tau = 0.0;
  double treated_mass = 0.0;
  double control_mass = 0.0;
  /// False when this node's estimate was inherited from an ancestor.
  bool own_estimate = true;
};

struct CausalTree {
  Tree<CausalLeaf> tree;
  /// Row indices (into the training dataset), sorted ascending.
  std::vector<std::size_t> split_half;
  std::vector<std::size_t> estimation_half;

  bool in_bag(std::size_t row) const;
};

struct CausalForestModel {
  std::vector<CausalTree> trees;
  std::size_t num_covariates = 0;
  ForestConfig config;
  /// Leaf value used when a tree's root is not estimable on its estimation
  /// half: the weighted difference in means over all positive-weight rows.
  double fallback_tau = 0.0;
};

/// Grows the structure of one honest tree on the structure half.
std::vector<TreeNode> grow_causal_structure(const StudyDataset& data, std::span<const double> w,
                                            std::vector<std::size_t> rows,
                                            const ForestConfig& config, Rng& rng);

/// Fills node payloads from the estimation rows only. Nodes that are not
/// estimable inherit their nearest estimable ancestor; an inestimable root
/// receives `fallback_tau`.
std::vector<CausalLeaf> estimate_leaves(const std::vector<TreeNode>& nodes,
                                        const StudyDataset& data, std::span<const double> w,
                                        std::span<const std::size_t> estimation_rows,
                                        double fallback_tau);

/// Honest causal forest. Rows with zero weight are dropped before any random
/// draw, so they behave exactly as if absent from `data`.
CausalForestModel fit_causal_forest(const StudyDataset& data, const ObservationWeights& w,
                                    const ForestConfig& config);

double predict_cate(const CausalForestModel& model, std::span<const double> x);

/// Batch prediction, parallel over rows.
std::vector<double> predict_cate(const CausalForestModel& model, const Matrix& x,
                                 int num_threads = 0);

/// Out-of-bag prediction for training row `row`: averages only trees whose
/// subsample excluded it; falls back to all trees when every tree used it.
double predict_cate_oob(const CausalForestModel& model, const Matrix& training_x,
                        std::size_t row);

void dump_forest(std::ostream& out, const CausalForestModel& model);

}  // namespace mcf
