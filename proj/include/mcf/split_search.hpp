#pragma once

// Greedy axis-aligned tree growth shared by the classification and causal
// forests. A split criterion supplies sufficient statistics and a score; this
// file owns candidate enumeration, tie-breaking and recursion.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mcf/dataset.hpp"
#include "mcf/random.hpp"
#include "mcf/tree.hpp"

namespace mcf {

template <class C>
concept SplitCriterion = requires(const C& c, typename C::Stats& s, const typename C::Stats& cs,
                                  std::size_t row) {
  c.accumulate(s, row);
  { c.difference(cs, cs) } -> std::same_as<typename C::Stats>;
  { c.splittable(cs) } -> std::convertible_to<bool>;
  { c.score(cs, cs, cs) } -> std::convertible_to<double>;
  { c.min_improvement(cs) } -> std::convertible_to<double>;
};

struct GrowLimits {
  std::size_t mtry = 1;
  std::optional<std::size_t> max_depth;
};

struct SplitCandidate {
  double score = -std::numeric_limits<double>::infinity();
  std::uint32_t feature = TreeNode::kLeaf;
  double threshold = 0.0;
};

/// Threshold between two consecutive distinct sorted values. Falls back to the
/// lower value when the midpoint rounds up to the upper one, so that routing by
/// `x <= threshold` always reproduces the evaluated partition.
inline double midpoint_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

/// Best split over `features` (ascending), scanning thresholds in ascending
/// order. Strict improvement keeps the first maximum, i.e. ties resolve to the
/// lowest feature index and then the lowest threshold.
template <SplitCriterion Criterion>
SplitCandidate find_best_split(const Matrix& x, std::span<const std::size_t> rows,
                               std::span<const std::size_t> features, const Criterion& criterion,
                               const typename Criterion::Stats& parent,
                               std::vector<std::pair<double, std::size_t>>& scratch) {
  SplitCandidate best;
  scratch.resize(rows.size());
  for (std::size_t feature : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) scratch[i] = {x(rows[i], feature), rows[i]};
    std::sort(scratch.begin(), scratch.end());
    typename Criterion::Stats left{};
    for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
      criterion.accumulate(left, scratch[i].second);
      if (scratch[i].first == scratch[i + 1].first) continue;
      const double score = criterion.score(left, criterion.difference(parent, left), parent);
      if (score > best.score) {
        best.score = score;
        best.feature = static_cast<std::uint32_t>(feature);
        best.threshold = midpoint_threshold(scratch[i].first, scratch[i + 1].first);
      }
    }
  }
  return best;
}

/// Grows one tree on `rows`. Returns nodes only; payloads are filled by the
/// caller by routing whichever rows it wants through the structure.
template <SplitCriterion Criterion>
std::vector<TreeNode> grow_tree(const Matrix& x, std::vector<std::size_t> rows,
                                const Criterion& criterion, const GrowLimits& limits, Rng& rng) {
  struct Pending {
    std::uint32_t id;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<TreeNode> nodes(1);
  std::vector<Pending> stack;
  stack.push_back({0, std::move(rows), 0});

  std::vector<std::size_t> all_features(x.cols());
  std::iota(all_features.begin(), all_features.end(), 0);
  std::vector<std::pair<double, std::size_t>> scratch;

  while (!stack.empty()) {
    Pending node = std::move(stack.back());
    stack.pop_back();

    typename Criterion::Stats stats{};
    for (std::size_t r : node.rows) criterion.accumulate(stats, r);
    if ((limits.max_depth && node.depth >= *limits.max_depth) || !criterion.splittable(stats)) {
      continue;
    }

    auto features = sample_without_replacement(all_features, limits.mtry, rng);
    std::sort(features.begin(), features.end());
    const SplitCandidate best =
        find_best_split(x, node.rows, features, criterion, stats, scratch);
    if (!(best.score > criterion.min_improvement(stats))) continue;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : node.rows) {
      (x(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }

    const auto left_id = static_cast<std::uint32_t>(nodes.size());
    const auto right_id = left_id + 1;
    nodes[node.id].feature = best.feature;
    nodes[node.id].threshold = best.threshold;
    nodes[node.id].left = left_id;
    nodes[node.id].right = right_id;
    nodes.push_back(TreeNode{.parent = node.id});
    nodes.push_back(TreeNode{.parent = node.id});
    stack.push_back({right_id, std::move(right_rows), node.depth + 1});
    stack.push_back({left_id, std::move(left_rows), node.depth + 1});
  }
  return nodes;
}

/// Kish effective sample size (sum w)^2 / sum w^2; invariant to rescaling the
/// weights and equal to the row count for unit weights.
inline double effective_size(double sum_w, double sum_w2) {
  return sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
}

}  // namespace mcf
