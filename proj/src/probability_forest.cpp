#include "mcf/probability_forest.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mcf/parallel.hpp"
#include "mcf/random.hpp"
#include "mcf/split_search.hpp"

namespace mcf {

namespace {

class WeightedGini {
 public:
  struct Stats {
    double w0 = 0.0;
    double w1 = 0.0;
    double w_sq = 0.0;
  };

  WeightedGini(std::span<const std::uint8_t> labels, std::span<const double> weights,
               double min_node_size)
      : labels_(labels), weights_(weights), min_node_size_(min_node_size) {}

  void accumulate(Stats& s, std::size_t row) const {
    const double w = weights_[row];
    (labels_[row] ? s.w1 : s.w0) += w;
    s.w_sq += w * w;
  }

  Stats difference(const Stats& a, const Stats& b) const {
    return {a.w0 - b.w0, a.w1 - b.w1, a.w_sq - b.w_sq};
  }

  bool splittable(const Stats& s) const {
    return s.w0 > 0.0 && s.w1 > 0.0 && effective_size(s.w0 + s.w1, s.w_sq) > min_node_size_;
  }

  double score(const Stats& left, const Stats& right, const Stats& parent) const {
    if (!(left.w0 + left.w1 > 0.0) || !(right.w0 + right.w1 > 0.0)) {
      return -std::numeric_limits<double>::infinity();
    }
    return impurity(parent) - impurity(left) - impurity(right);
  }

  double min_improvement(const Stats& parent) const { return 1e-12 * (parent.w0 + parent.w1); }

 private:
  static double impurity(const Stats& s) {
    const double total = s.w0 + s.w1;
    return total - (s.w0 * s.w0 + s.w1 * s.w1) / total;
  }

  std::span<const std::uint8_t> labels_;
  std::span<const double> weights_;
  double min_node_size_;
};

}  // namespace

ProbabilityForest fit_classification_forest(const Matrix& x, std::span<const std::uint8_t> labels,
                                            const ObservationWeights& weights,
                                            const ForestConfig& config) {
  const std::size_t n = x.rows();
  if (labels.size() != n || weights.size() != n) {
    throw std::invalid_argument("fit_classification_forest: dimension mismatch");
  }
  const std::size_t mtry = config.classification_mtry(x.cols());
  config.check(x.cols(), mtry);

  std::vector<std::size_t> active;
  double total[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 1) throw std::invalid_argument("fit_classification_forest: non-binary label");
    if (weights[i] > 0.0) {
      active.push_back(i);
      total[labels[i]] += weights[i];
    }
  }
  if (!(total[0] > 0.0 && total[1] > 0.0)) {
    throw std::invalid_argument("fit_classification_forest: both classes need positive weight");
  }

  const std::size_t sample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.subsample_fraction * active.size())));
  const WeightedGini criterion(labels, weights.span(), static_cast<double>(config.min_node_size));
  const GrowLimits limits{mtry, config.max_depth};

  ProbabilityForest model;
  model.num_covariates = x.cols();
  model.config = config;
  model.trees.resize(config.num_trees);

  parallel_for(config.num_trees, config.num_threads, [&](std::size_t t) {
    Rng rng = make_rng(config.seed, {t});
    auto rows = sample_without_replacement(active, sample_size, rng);
    Tree<double> tree;
    tree.nodes = grow_tree(x, rows, criterion, limits, rng);

    std::vector<double> w1(tree.nodes.size(), 0.0);
    std::vector<double> w_all(tree.nodes.size(), 0.0);
    for (std::size_t r : rows) {
      std::size_t id = 0;
      for (;;) {
        w_all[id] += weights[r];
        if (labels[r]) w1[id] += weights[r];
        const TreeNode& node = tree.nodes[id];
        if (node.is_leaf()) break;
        id = x(r, node.feature) <= node.threshold ? node.left : node.right;
      }
    }
    tree.payload.resize(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      tree.payload[i] = w_all[i] > 0.0 ? std::clamp(w1[i] / w_all[i], 0.0, 1.0) : 0.5;
    }
    model.trees[t] = std::move(tree);
  });
  return model;
}

double predict_probability(const ProbabilityForest& model, std::span<const double> x) {
  if (x.size() != model.num_covariates) {
    throw std::invalid_argument("predict_probability: expected " +
                                std::to_string(model.num_covariates) + " covariates, got " +
                                std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.payload[tree.leaf_for(x)];
  return std::clamp(sum / static_cast<double>(model.trees.size()), 0.0, 1.0);
}

std::vector<double> predict_probability(const ProbabilityForest& model, const Matrix& x,
                                        int num_threads) {
  if (x.cols() != model.num_covariates) {
    throw std::invalid_argument("predict_probability: covariate dimension mismatch");
  }
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), num_threads,
               [&](std::size_t i) { out[i] = predict_probability(model, x.row(i)); });
  return out;
}

void dump_forest(std::ostream& out, const ProbabilityForest& model) {
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out << "# tree " << t << '\n';
    dump_tree<double>(out, model.trees[t], [](std::ostream& o, const double& p) { o << p; });
  }
}

}  // namespace mcf
