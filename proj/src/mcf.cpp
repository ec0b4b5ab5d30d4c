#include "mcf/mcf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mcf/stats.hpp"

namespace mcf {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Primary: return "Primary";
    case EstimatorKind::AuxOnly: return "AuxOnly";
    case EstimatorKind::Combined: return "Combined";
    case EstimatorKind::AuxPS: return "AuxPS";
    case EstimatorKind::AuxCorr: return "AuxCorr";
    case EstimatorKind::MCF: return "MCF";
  }
  return "?";
}

std::optional<EstimatorKind> parse_estimator(std::string_view name) {
  for (EstimatorKind kind : kAllEstimators) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

ObservationWeights propensity_weights(std::span<const double> pi_hat,
                                      std::span<const std::uint8_t> z) {
  if (pi_hat.size() != z.size()) {
    throw std::invalid_argument("propensity_weights: length mismatch");
  }
  std::vector<double> w(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double pi = pi_hat[i];
    if (!(pi >= 0.0 && pi <= 1.0)) {
      throw std::invalid_argument("propensity_weights: probability at " + std::to_string(i) +
                                  " outside [0, 1]");
    }
    if (z[i] > 1) throw std::invalid_argument("propensity_weights: non-binary treatment");
    w[i] = z[i] * pi + (1 - z[i]) * (1.0 - pi);
  }
  return ObservationWeights(std::move(w));
}

double correlation_weight(std::span<const double> tau_a, std::span<const double> tau_b) {
  if (tau_a.size() != tau_b.size()) {
    throw std::invalid_argument("correlation_weight: length mismatch");
  }
  if (tau_a.size() < 2) throw std::invalid_argument("correlation_weight: need at least 2 values");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  // Checked exactly: the mean of a constant vector need not round back to it.
  if (constant(tau_a) || constant(tau_b)) return 0.0;
  const double mean_a = mean(tau_a);
  const double mean_b = mean(tau_b);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < tau_a.size(); ++i) {
    const double da = tau_a[i] - mean_a;
    const double db = tau_b[i] - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return std::clamp(std::abs(sab) / std::sqrt(saa * sbb), 0.0, 1.0);
}

std::uint64_t estimator_seed(std::uint64_t master, std::optional<EstimatorKind> kind) {
  return derive_seed(master, {0xf0, kind ? static_cast<std::uint64_t>(*kind) + 1 : 0});
}

std::vector<double> variant_aux_weights(EstimatorKind kind, const McfFit& fit) {
  switch (kind) {
    case EstimatorKind::Combined: return std::vector<double>(fit.num_aux, 1.0);
    case EstimatorKind::AuxPS: return fit.aux_weights.values();
    case EstimatorKind::AuxCorr: return std::vector<double>(fit.num_aux, fit.rho);
    case EstimatorKind::MCF: return fit.final_aux_weights.values();
    case EstimatorKind::Primary: return std::vector<double>(fit.num_aux, 0.0);
    case EstimatorKind::AuxOnly: break;
  }
  throw std::invalid_argument("variant_aux_weights: AuxOnly does not pool");
}

namespace {

ForestConfig with_seed(ForestConfig config, std::uint64_t seed, int threads) {
  config.seed = seed;
  config.num_threads = threads;
  return config;
}

std::vector<double> pooled_weights(std::size_t num_train, const std::vector<double>& aux) {
  std::vector<double> w(num_train, 1.0);
  w.insert(w.end(), aux.begin(), aux.end());
  return w;
}

}  // namespace

McfFit fit_mcf(const StudyDataset& train, const StudyDataset& aux, const McfOptions& options) {
  require_valid(train, "fit_mcf (train)");
  McfFit fit;
  fit.num_train = train.size();
  fit.num_aux = aux.size();
  auto causal_config = [&](EstimatorKind kind) {
    return with_seed(options.causal, estimator_seed(options.seed, kind), options.num_threads);
  };

  if (aux.size() == 0) {
    fit.diagnostics.emplace_back("auxiliary dataset is empty; every estimator uses the primary forest");
    auto primary = fit_causal_forest(train, ObservationWeights::uniform(train.size()),
                                     causal_config(EstimatorKind::Primary));
    fit.pi_model = fit_classification_forest(
        train.x(), train.z(), ObservationWeights::uniform(train.size()),
        with_seed(options.propensity, estimator_seed(options.seed, std::nullopt),
                  options.num_threads));
    for (EstimatorKind kind : kAllEstimators) fit.models.emplace(kind, primary);
    return fit;
  }
  require_valid(aux, "fit_mcf (auxiliary)");
  if (aux.num_covariates() != train.num_covariates()) {
    throw std::invalid_argument("fit_mcf: train and auxiliary covariate dimensions differ");
  }

  const StudyDataset pooled = concat(train, aux);

  // CF_tr and CF_{tr+a}.
  auto primary = fit_causal_forest(train, ObservationWeights::uniform(train.size()),
                                   causal_config(EstimatorKind::Primary));
  auto combined = fit_causal_forest(pooled, ObservationWeights::uniform(pooled.size()),
                                    causal_config(EstimatorKind::Combined));

  // Correlation of the two forests' CATEs on the training rows.
  std::vector<double> tau_tr(train.size());
  std::vector<double> tau_pooled(train.size());
  if (options.oob_correlation) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      tau_tr[i] = predict_cate_oob(primary, train.x(), i);
      tau_pooled[i] = predict_cate_oob(combined, pooled.x(), i);
    }
  } else {
    tau_tr = predict_cate(primary, train.x(), options.num_threads);
    tau_pooled = predict_cate(combined, train.x(), options.num_threads);
  }
  fit.rho = correlation_weight(tau_tr, tau_pooled);
  if (fit.rho == 0.0) {
    fit.diagnostics.emplace_back("rho is 0 (constant or uncorrelated CATE predictions)");
  }

  // Propensity model on the training rows, evaluated at auxiliary covariates.
  fit.pi_model = fit_classification_forest(
      train.x(), train.z(), ObservationWeights::uniform(train.size()),
      with_seed(options.propensity, estimator_seed(options.seed, std::nullopt),
                options.num_threads));
  std::vector<double> pi_aux = predict_probability(fit.pi_model, aux.x(), options.num_threads);
  for (double& p : pi_aux) {
    p = std::clamp(p, options.propensity_clamp_low, options.propensity_clamp_high);
  }
  fit.aux_weights = propensity_weights(pi_aux, aux.z());
  std::vector<double> final_w = fit.aux_weights.values();
  for (double& v : final_w) v *= fit.rho;
  fit.final_aux_weights = ObservationWeights(std::move(final_w));

  fit.models.emplace(EstimatorKind::Primary, std::move(primary));
  fit.models.emplace(EstimatorKind::Combined, std::move(combined));
  fit.models.emplace(EstimatorKind::AuxOnly,
                     fit_causal_forest(aux, ObservationWeights::uniform(aux.size()),
                                       causal_config(EstimatorKind::AuxOnly)));
  for (EstimatorKind kind : {EstimatorKind::AuxPS, EstimatorKind::AuxCorr, EstimatorKind::MCF}) {
    const ObservationWeights w(pooled_weights(train.size(), variant_aux_weights(kind, fit)));
    fit.models.emplace(kind, fit_causal_forest(pooled, w, causal_config(kind)));
  }
  return fit;
}

std::map<EstimatorKind, std::vector<double>> predict_all(const McfFit& fit,
                                                         const StudyDataset& test,
                                                         int num_threads) {
  std::map<EstimatorKind, std::vector<double>> out;
  for (const auto& [kind, model] : fit.models) {
    if (test.num_covariates() != model.num_covariates) {
      throw std::invalid_argument("predict_all: test data has " +
                                  std::to_string(test.num_covariates()) + " covariates, model expects " +
                                  std::to_string(model.num_covariates));
    }
    out.emplace(kind, predict_cate(model, test.x(), num_threads));
  }
  return out;
}

std::string summarize(const McfFit& fit) {
  std::ostringstream out;
  out.precision(10);
  out << "rho = " << fit.rho << '\n';
  out << "num_train = " << fit.num_train << '\n';
  out << "num_aux = " << fit.num_aux << '\n';
  auto quantiles = [&](const char* name, const ObservationWeights& w) {
    if (w.size() == 0) return;
    std::vector<double> v = w.values();
    std::sort(v.begin(), v.end());
    out << name << ".min = " << v.front() << '\n';
    out << name << ".q1 = " << quantile_sorted(v, 0.25) << '\n';
    out << name << ".median = " << quantile_sorted(v, 0.5) << '\n';
    out << name << ".q3 = " << quantile_sorted(v, 0.75) << '\n';
    out << name << ".max = " << v.back() << '\n';
    out << name << ".mean = " << mean(v) << '\n';
  };
  quantiles("aux_weight", fit.aux_weights);
  quantiles("final_aux_weight", fit.final_aux_weights);
  out << "propensity.num_trees = " << fit.pi_model.config.num_trees << '\n';
  out << "propensity.seed = " << fit.pi_model.config.seed << '\n';
  for (const auto& [kind, model] : fit.models) {
    const std::string prefix = "estimator." + std::string(to_string(kind));
    out << prefix << ".num_trees = " << model.config.num_trees << '\n';
    out << prefix << ".seed = " << model.config.seed << '\n';
    out << prefix << ".min_leaf_arm_size = " << model.config.min_leaf_arm_size << '\n';
  }
  for (std::size_t i = 0; i < fit.diagnostics.size(); ++i) {
    out << "diagnostic." << i << " = " << fit.diagnostics[i] << '\n';
  }
  return out.str();
}

}  // namespace mcf
