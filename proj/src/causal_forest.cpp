#include "mcf/causal_forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcf/parallel.hpp"
#include "mcf/split_search.hpp"

namespace mcf {

std::optional<double> leaf_estimate(std::span<const double> y, std::span<const std::uint8_t> z,
                                    std::span<const double> w) {
  if (y.size() != z.size() || y.size() != w.size()) {
    throw std::invalid_argument("leaf_estimate: length mismatch");
  }
  ArmStats stats;
  for (std::size_t i = 0; i < y.size(); ++i) stats.add(y[i], z[i], w[i]);
  if (!stats.estimable()) return std::nullopt;
  return stats.tau();
}

double ArmStats::treated_size() const { return effective_size(w1, w1_sq); }
double ArmStats::control_size() const { return effective_size(w0, w0_sq); }

double split_score(const ArmStats& left, const ArmStats& right, const ArmStats& parent,
                   double min_arm_size) {
  constexpr double kInadmissible = -std::numeric_limits<double>::infinity();
  if (!left.estimable() || !right.estimable() || !parent.estimable()) return kInadmissible;
  // Right-hand statistics come from parent - left, so an arm that sits exactly
  // at the bound can land a few ulps under it.
  const double bound = min_arm_size * (1.0 - 1e-9);
  if (left.treated_size() < bound || left.control_size() < bound ||
      right.treated_size() < bound || right.control_size() < bound) {
    return kInadmissible;
  }
  const double tau_parent = parent.tau();
  const double dl = left.tau() - tau_parent;
  const double dr = right.tau() - tau_parent;
  return left.mass() * dl * dl + right.mass() * dr * dr;
}

namespace {

class HeterogeneityCriterion {
 public:
  using Stats = ArmStats;

  HeterogeneityCriterion(const StudyDataset& data, std::span<const double> w,
                         const ForestConfig& config)
      : y_(data.y()),
        z_(data.z()),
        w_(w),
        min_node_size_(static_cast<double>(config.min_node_size)),
        min_arm_size_(config.min_leaf_arm_size) {}

  void accumulate(Stats& s, std::size_t row) const { s.add(y_[row], z_[row], w_[row]); }
  Stats difference(const Stats& a, const Stats& b) const { return a - b; }
  bool splittable(const Stats& s) const {
    return s.estimable() &&
           effective_size(s.mass(), s.w1_sq + s.w0_sq) > min_node_size_;
  }
  double score(const Stats& l, const Stats& r, const Stats& p) const {
    return split_score(l, r, p, min_arm_size_);
  }
  double min_improvement(const Stats&) const { return 0.0; }

 private:
  std::span<const double> y_;
  std::span<const std::uint8_t> z_;
  std::span<const double> w_;
  double min_node_size_;
  double min_arm_size_;
};

}  // namespace

std::vector<TreeNode> grow_causal_structure(const StudyDataset& data, std::span<const double> w,
                                            std::vector<std::size_t> rows,
                                            const ForestConfig& config, Rng& rng) {
  const HeterogeneityCriterion criterion(data, w, config);
  return grow_tree(data.x(), std::move(rows), criterion,
                   GrowLimits{config.causal_mtry(data.num_covariates()), config.max_depth}, rng);
}

std::vector<CausalLeaf> estimate_leaves(const std::vector<TreeNode>& nodes,
                                        const StudyDataset& data, std::span<const double> w,
                                        std::span<const std::size_t> estimation_rows,
                                        double fallback_tau) {
  std::vector<ArmStats> stats(nodes.size());
  for (std::size_t r : estimation_rows) {
    const auto x = data.x().row(r);
    std::size_t id = 0;
    for (;;) {
      stats[id].add(data.y()[r], data.z()[r], w[r]);
      if (nodes[id].is_leaf()) break;
      id = x[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left : nodes[id].right;
    }
  }
  // Parents precede children, so ancestors are resolved before they are needed.
  std::vector<CausalLeaf> payload(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (stats[i].estimable()) {
      payload[i] = {stats[i].tau(), stats[i].w1, stats[i].w0, true};
    } else if (i == 0) {
      payload[i] = {fallback_tau, 0.0, 0.0, false};
    } else {
      payload[i] = payload[nodes[i].parent];
      payload[i].own_estimate = false;
    }
  }
  return payload;
}

bool CausalTree::in_bag(std::size_t row) const {
  return std::binary_search(split_half.begin(), split_half.end(), row) ||
         std::binary_search(estimation_half.begin(), estimation_half.end(), row);
}

CausalForestModel fit_causal_forest(const StudyDataset& data, const ObservationWeights& w,
                                    const ForestConfig& config) {
  require_valid(data, "fit_causal_forest");
  if (w.size() != data.size()) {
    throw std::invalid_argument("fit_causal_forest: weight vector has length " +
                                std::to_string(w.size()) + ", dataset has " +
                                std::to_string(data.size()) + " rows");
  }
  config.check(data.num_covariates(), config.causal_mtry(data.num_covariates()));

  std::vector<std::size_t> active;
  ArmStats overall;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (w[i] > 0.0) {
      active.push_back(i);
      overall.add(data.y()[i], data.z()[i], w[i]);
    }
  }
  if (!overall.estimable()) {
    throw std::invalid_argument(
        "fit_causal_forest: positive-weight rows must include both treated and control");
  }

  const auto sample_size =
      static_cast<std::size_t>(std::floor(config.subsample_fraction * active.size()));
  const auto split_size =
      static_cast<std::size_t>(std::floor(config.honesty_fraction * sample_size));
  if (split_size == 0 || split_size == sample_size) {
    throw std::invalid_argument("fit_causal_forest: subsample of " +
                                std::to_string(sample_size) +
                                " rows is too small for an honest split");
  }

  CausalForestModel model;
  model.num_covariates = data.num_covariates();
  model.config = config;
  model.fallback_tau = overall.tau();
  model.trees.resize(config.num_trees);

  parallel_for(config.num_trees, config.num_threads, [&](std::size_t t) {
    Rng rng = make_rng(config.seed, {t});
    auto sample = sample_without_replacement(active, sample_size, rng);
    CausalTree tree;
    tree.split_half.assign(sample.begin(), sample.begin() + split_size);
    tree.estimation_half.assign(sample.begin() + split_size, sample.end());
    std::ranges::sort(tree.split_half);
    std::ranges::sort(tree.estimation_half);

    tree.tree.nodes = grow_causal_structure(data, w.span(), tree.split_half, config, rng);
    tree.tree.payload =
        estimate_leaves(tree.tree.nodes, data, w.span(), tree.estimation_half, model.fallback_tau);
    model.trees[t] = std::move(tree);
  });
  return model;
}

double predict_cate(const CausalForestModel& model, std::span<const double> x) {
  if (x.size() != model.num_covariates) {
    throw std::invalid_argument("predict_cate: expected " + std::to_string(model.num_covariates) +
                                " covariates, got " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.tree.payload[t.tree.leaf_for(x)].tau;
  return sum / static_cast<double>(model.trees.size());
}

std::vector<double> predict_cate(const CausalForestModel& model, const Matrix& x,
                                 int num_threads) {
  if (x.cols() != model.num_covariates) {
    throw std::invalid_argument("predict_cate: covariate dimension mismatch");
  }
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), num_threads,
               [&](std::size_t i) { out[i] = predict_cate(model, x.row(i)); });
  return out;
}

double predict_cate_oob(const CausalForestModel& model, const Matrix& training_x,
                        std::size_t row) {
  const auto x = training_x.row(row);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : model.trees) {
    if (t.in_bag(row)) continue;
    sum += t.tree.payload[t.tree.leaf_for(x)].tau;
    ++count;
  }
  if (count == 0) return predict_cate(model, x);
  return sum / static_cast<double>(count);
}

void dump_forest(std::ostream& out, const CausalForestModel& model) {
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out << "# tree " << t << '\n';
    dump_tree<CausalLeaf>(out, model.trees[t].tree, [](std::ostream& o, const CausalLeaf& leaf) {
      o << leaf.tau << ' ' << leaf.treated_mass << ' ' << leaf.control_mass;
    });
  }
}

}  // namespace mcf
