#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace mcf {

struct ForestConfig {
  std::size_t num_trees = 500;
  /// Features tried per node; unset means the forest type's default.
  std::optional<std::size_t> mtry;
  /// Nodes whose effective size is at most this become leaves.
  std::size_t min_node_size = 10;
  double subsample_fraction = 0.5;
  /// Share of each subsample used to grow structure (causal forests only).
  double honesty_fraction = 0.5;
  std::optional<std::size_t> max_depth;
  /// Minimum effective size of each treatment arm in every child of a causal
  /// split, measured on the structure half.
  double min_leaf_arm_size = 5.0;
  std::uint64_t seed = 42;
  /// 0 = use MCF_THREADS or the OpenMP default; 1 = serial reference path.
  int num_threads = 0;

  static ForestConfig propensity_defaults() {
    ForestConfig c;
    c.num_trees = 500;
    return c;
  }
  static ForestConfig causal_defaults() {
    ForestConfig c;
    c.num_trees = 2000;
    return c;
  }

  std::size_t classification_mtry(std::size_t p) const {
    return mtry.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)))));
  }
  std::size_t causal_mtry(std::size_t p) const {
    return mtry.value_or(std::min<std::size_t>(p, (p + 2) / 3 + 1));
  }

  void check(std::size_t p, std::size_t effective_mtry) const {
    if (num_trees == 0) throw std::invalid_argument("ForestConfig: num_trees must be positive");
    if (min_node_size == 0) throw std::invalid_argument("ForestConfig: min_node_size must be >= 1");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
      throw std::invalid_argument("ForestConfig: subsample_fraction must lie in (0, 1]");
    }
    if (!(honesty_fraction > 0.0 && honesty_fraction < 1.0)) {
      throw std::invalid_argument("ForestConfig: honesty_fraction must lie in (0, 1)");
    }
    if (max_depth && *max_depth == 0) {
      throw std::invalid_argument("ForestConfig: max_depth must be positive");
    }
    if (effective_mtry == 0 || effective_mtry > p) {
      throw std::invalid_argument("ForestConfig: mtry=" + std::to_string(effective_mtry) +
                                  " must lie in [1, p=" + std::to_string(p) + "]");
    }
  }
};

}  // namespace mcf
