// Acceptance gate: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mcf/causal_forest.hpp"
#include "mcf/harness.hpp"
#include "mcf/mcf.hpp"
#include "mcf/report.hpp"
#include "mcf/simgen.hpp"
#include "mcf/stats.hpp"
#include "oracles.hpp"

namespace {

using namespace mcf;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " --"
            << o.detail.str() << std::endl;
  if (!o.pass) ++failures;
}

// P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_upper_tail(std::size_t k, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                      static_cast<double>(n) * std::log(2.0));
  }
  return total;
}

// One-sided paired sign test that `worse` exceeds `better`; ties are dropped.
double sign_test(const std::vector<double>& worse, const std::vector<double>& better) {
  std::size_t wins = 0, n = 0;
  for (std::size_t i = 0; i < worse.size(); ++i) {
    if (worse[i] == better[i]) continue;
    ++n;
    wins += worse[i] > better[i];
  }
  return n == 0 ? 1.0 : binomial_upper_tail(wins, n);
}

const ScenarioSummary& find(const StudySummary& s, Heterogeneity h, Magnitude m) {
  const std::string id = preset_name(h, m, 0.2, PropensityRegime::Different);
  for (const auto& sc : s.scenarios) {
    if (sc.id == id) return sc;
  }
  throw std::runtime_error("scenario missing: " + id);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void criterion_high_heterogeneity(const StudySummary& study) {
  Outcome c1, c2;
  for (Magnitude m : {Magnitude::High, Magnitude::Mid}) {
    const auto& s = find(study, Heterogeneity::High, m);
    const auto& primary = s.estimators.at(EstimatorKind::Primary);
    const auto& combined = s.estimators.at(EstimatorKind::Combined);
    const auto& mcf = s.estimators.at(EstimatorKind::MCF);
    const auto& ps = s.estimators.at(EstimatorKind::AuxPS);
    const auto& corr = s.estimators.at(EstimatorKind::AuxCorr);
    const std::string tag = "High/" + std::string(to_string(m));

    const double p1 = sign_test(combined.sample, primary.sample);
    c1.detail << " " << tag << ": Primary=" << fmt(primary.mean) << " Combined=" << fmt(combined.mean)
              << " sign-p=" << fmt(p1) << ";";
    c1.require(combined.mean > primary.mean, tag + " mean Combined > Primary");
    c1.require(p1 < 0.01, tag + " sign test");
    c1.require(s.failures == 0, tag + " replication failures");

    const double p2 = sign_test(combined.sample, mcf.sample);
    c2.detail << " " << tag << ": MCF=" << fmt(mcf.mean) << " AuxPS=" << fmt(ps.mean)
              << " AuxCorr=" << fmt(corr.mean) << " Combined=" << fmt(combined.mean)
              << " sign-p=" << fmt(p2) << ";";
    c2.require(mcf.mean < combined.mean, tag + " mean MCF < Combined");
    c2.require(p2 < 0.01, tag + " sign test");
    c2.require(ps.mean < combined.mean, tag + " mean AuxPS < Combined");
    c2.require(corr.mean < combined.mean, tag + " mean AuxCorr < Combined");
  }
  report(1, "Combined worse than Primary under high heterogeneity", c1);
  report(2, "MCF, AuxPS, AuxCorr better than Combined under high heterogeneity", c2);
}

void criterion_no_heterogeneity(const StudySummary& study) {
  Outcome c;
  const auto& low = find(study, Heterogeneity::None, Magnitude::Low);
  const double primary = low.estimators.at(EstimatorKind::Primary).mean;
  const double combined_low = low.estimators.at(EstimatorKind::Combined).mean;
  c.detail << " None/low: Primary=" << fmt(primary) << " Combined=" << fmt(combined_low) << ";";
  c.require(primary >= combined_low, "None/low Primary >= Combined");
  for (Magnitude m : {Magnitude::Mid, Magnitude::High}) {
    const auto& s = find(study, Heterogeneity::None, m);
    const double mcf = s.estimators.at(EstimatorKind::MCF).mean;
    const double combined = s.estimators.at(EstimatorKind::Combined).mean;
    const double rel = std::abs(mcf - combined) / combined;
    c.detail << " None/" << to_string(m) << ": MCF=" << fmt(mcf) << " Combined=" << fmt(combined)
             << " rel.diff=" << fmt(rel) << ";";
    c.require(rel <= 0.25, "None/" + std::string(to_string(m)) + " |MCF-Combined| <= 25%");
  }
  report(3, "minimal differences without heterogeneity", c);
}

void criterion_weight_formulas() {
  Outcome c;
  auto w = propensity_weights(std::vector<double>{0.7, 0.7, 0.5, 0.5},
                              std::vector<std::uint8_t>{1, 0, 1, 0});
  c.require(std::abs(w[0] - 0.7) <= 1e-12, "Z=1 pi=0.7 -> 0.7");
  c.require(std::abs(w[1] - 0.3) <= 1e-12, "Z=0 pi=0.7 -> 0.3");
  c.require(std::abs(w[2] - 0.5) <= 1e-12 && std::abs(w[3] - 0.5) <= 1e-12, "pi=0.5 -> 0.5");
  const std::vector<double> a = {0.3, -1.2, 2.5, 0.9, 1.1};
  std::vector<double> neg(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
  c.require(std::abs(correlation_weight(a, a) - 1.0) <= 1e-12, "self correlation 1");
  c.require(std::abs(correlation_weight(a, neg) - 1.0) <= 1e-12, "negated correlation 1");
  c.require(std::abs(correlation_weight(std::vector<double>{1, -1, 1, -1},
                                        std::vector<double>{1, 1, -1, -1})) <= 1e-12,
            "orthogonal correlation 0");
  c.detail << " propensity and correlation weight examples at 1e-12";
  report(4, "weight formulas", c);
}

StudyDataset oracle_trial(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, p);
  std::vector<std::uint8_t> z(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = standard_normal(rng);
    z[i] = uniform01(rng) < 0.5;
    y[i] = 0.5 * x(i, p - 1) + z[i] * (0.5 + 2.0 * x(i, 0)) + standard_normal(rng);
  }
  return {std::move(x), std::move(z), std::move(y), std::vector<std::uint8_t>(n, 0)};
}

void criterion_oracles() {
  Outcome c;
  Rng rng(2024);

  std::size_t leaf_cases = 0;
  for (int k = 0; k < 25; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 20);
    std::vector<double> y(n), w(n);
    std::vector<std::uint8_t> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 3.0 * standard_normal(rng);
      w[i] = uniform01(rng);
      z[i] = i < 2 ? static_cast<std::uint8_t>(i) : uniform01(rng) < 0.5;
    }
    auto got = leaf_estimate(y, z, w);
    auto want = oracle::weighted_difference_in_means(y, z, w);
    const bool ok = got.has_value() == want.has_value() &&
                    (!want || std::abs(*got - *want) <= 1e-10 * std::max(1.0, std::abs(*want)));
    c.require(ok, "leaf_estimate case " + std::to_string(k));
    ++leaf_cases;
  }

  std::size_t trees = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 8 + uniform_index(rng, 5);
    const std::size_t p = 1 + uniform_index(rng, 2);
    auto d = oracle_trial(n, p, seed + 500);
    std::vector<double> w(n);
    for (auto& v : w) v = 0.5 + 0.5 * uniform01(rng);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    ForestConfig cfg;
    cfg.mtry = p;
    cfg.max_depth = 2;
    cfg.min_node_size = 1;
    cfg.min_leaf_arm_size = 1.0;
    Rng tree_rng(seed);
    auto nodes = grow_causal_structure(d, w, rows, cfg, tree_rng);
    auto want = oracle::depth_two_causal_tree(d, w, rows, 1.0);
    auto same = [&](std::size_t id, const std::optional<std::pair<std::size_t, double>>& o) {
      if (!o) return nodes[id].is_leaf();
      return !nodes[id].is_leaf() && nodes[id].feature == o->first &&
             std::abs(nodes[id].threshold - o->second) <= 1e-12;
    };
    bool ok = same(0, want.root);
    if (ok && want.root) ok = same(nodes[0].left, want.left) && same(nodes[0].right, want.right);
    c.require(ok, "depth-2 tree seed " + std::to_string(seed));
    ++trees;
  }

  auto pair = generate_pair(scenario_from_tables(Heterogeneity::High, Magnitude::Mid, 0.2,
                                                 PropensityRegime::Different),
                            99);
  const auto& data = pair.primary;
  ForestConfig cfg;
  cfg.num_trees = 50;
  cfg.seed = 7;
  cfg.num_threads = 1;
  std::vector<double> w(data.size(), 1.0);
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 4 == 1) w[i] = 0.0;
    else kept.push_back(i);
  }
  auto zeroed = fit_causal_forest(data, ObservationWeights(w), cfg);
  auto dropped = fit_causal_forest(data.subset(kept), ObservationWeights::uniform(kept.size()), cfg);
  c.require(predict_cate(zeroed, data.x(), 1) == predict_cate(dropped, data.x(), 1),
            "weight-zero equivalence");

  auto base = fit_causal_forest(data, ObservationWeights::uniform(data.size(), 1.0), cfg);
  auto scaled = fit_causal_forest(data, ObservationWeights::uniform(data.size(), 0.25), cfg);
  c.require(predict_cate(base, data.x(), 1) == predict_cate(scaled, data.x(), 1),
            "rescaling invariance");

  c.detail << " " << leaf_cases << " leaf cases, " << trees
           << " depth-2 trees, weight-zero and rescaling checks";
  report(5, "oracle equivalences", c);
}

void criterion_dgp_moments() {
  Outcome c;
  const std::size_t n = 10000;
  const double root_n = std::sqrt(static_cast<double>(n));
  std::size_t block_id = 0;
  for (const auto& scenario : scenario_grid(0.2, PropensityRegime::Different)) {
    for (Study study : {Study::Primary, Study::Auxiliary}) {
      const CoefficientBlock& block =
          study == Study::Primary ? scenario.primary : scenario.auxiliary;
      const std::string tag = scenario.name + (study == Study::Primary ? "/primary" : "/aux");
      Rng rng = make_rng(31, {block_id++});

      for (double rho : {0.0, 0.2}) {
        auto x = generate_covariates(n, scenario.p, rho, rng);
        for (std::size_t j = 0; j < scenario.p; ++j) {
          auto cj = x.column(j);
          c.require(std::abs(mean(cj)) <= 4.0 / root_n, tag + " covariate mean");
          for (std::size_t k = j + 1; k < scenario.p; ++k) {
            auto ck = x.column(k);
            const double mj = mean(cj), mk = mean(ck);
            double sjj = 0, skk = 0, sjk = 0;
            for (std::size_t i = 0; i < n; ++i) {
              sjj += (cj[i] - mj) * (cj[i] - mj);
              skk += (ck[i] - mk) * (ck[i] - mk);
              sjk += (cj[i] - mj) * (ck[i] - mk);
            }
            c.require(std::abs(sjk / std::sqrt(sjj * skk) - rho) <= 4.0 / root_n,
                      tag + " covariate correlation");
          }
        }
      }

      auto x = generate_covariates(n, scenario.p, scenario.cov_rho, rng);
      SimScenario coin = scenario;
      (study == Study::Primary ? coin.primary : coin.auxiliary).beta_zx = 0.0;
      auto z0 = assign_treatment(x, coin, study, rng);
      const double frac = std::accumulate(z0.begin(), z0.end(), 0.0) / n;
      c.require(std::abs(frac - 0.5) <= 4.0 * 0.5 / root_n, tag + " treated fraction");

      SimScenario steep = scenario;
      steep.primary.beta_zx = 2.0;
      auto zs = assign_treatment(x, steep, Study::Primary, rng);
      double hi = 0, hi_n = 0, lo = 0, lo_n = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x(i, 0) > 1) {
          hi += zs[i];
          ++hi_n;
        } else if (x(i, 0) < -1) {
          lo += zs[i];
          ++lo_n;
        }
      }
      c.require(hi / hi_n > lo / lo_n, tag + " assignment monotone");
      const std::vector<double> origin(scenario.p, 0.0);
      c.require(1.0 / (1.0 + std::exp(-block.beta_zx *
                                      assignment_index(origin, scenario, Study::Primary))) == 0.5,
                tag + " expit(0)");

      CoefficientBlock zero{std::vector<double>(scenario.p, 0.0), 0.0, 0.0,
                            std::vector<double>(scenario.p, 0.0)};
      auto noise = generate_outcome(x, z0, zero, rng);
      const double m = mean(noise.y);
      double v = 0;
      for (double y : noise.y) v += (y - m) * (y - m);
      v /= n - 1;
      c.require(std::abs(m) <= 4.0 / root_n && v >= 0.9 && v <= 1.1, tag + " noise moments");

      Matrix at_origin(n, scenario.p, 0.0);
      std::vector<std::uint8_t> alternating(n);
      for (std::size_t i = 0; i < n; ++i) alternating[i] = i % 2;
      auto out = generate_outcome(at_origin, alternating, block, rng);
      double m1 = 0, m0 = 0;
      for (std::size_t i = 0; i < n; ++i) (alternating[i] ? m1 : m0) += out.y[i];
      const double effect = (m1 - m0) / (n / 2.0);
      c.require(std::abs(effect - block.beta_yz) <= 4.0 * std::sqrt(2.0 / (n / 2.0)),
                tag + " main effect at origin");

      auto linear = generate_outcome(x, z0, block, rng);
      for (std::size_t i = 0; i < 50; ++i) {
        double t = block.beta_yz;
        for (std::size_t j = 0; j < scenario.p; ++j) t += x(i, j) * block.beta_yzx[j];
        if (std::abs(linear.tau_true[i] - t) > 1e-12) {
          c.require(false, tag + " linear CATE");
          break;
        }
      }
    }
  }
  c.detail << " " << block_id << " coefficient blocks at n=" << n;
  report(6, "DGP moment checks", c);
}

void criterion_determinism() {
  Outcome c;
  HarnessOptions options = HarnessOptions::desk_scale();
  options.mcf.causal.num_trees = 100;
  options.mcf.propensity.num_trees = 50;
  std::vector<SimScenario> scenarios = {
      scenario_from_tables(Heterogeneity::High, Magnitude::High, 0.2, PropensityRegime::Different),
      scenario_from_tables(Heterogeneity::Medium, Magnitude::Low, 0.2,
                           PropensityRegime::Different)};
  auto serial = run_study(scenarios, 4, 8675309, 1, options);
  auto parallel = run_study(scenarios, 4, 8675309, 8, options);
  std::ostringstream a, b;
  write_long_csv(serial, a);
  write_long_csv(parallel, b);
  c.require(a.str() == b.str(), "long CSV differs between parallelism 1 and 8");
  c.detail << " " << a.str().size() << " bytes compared";
  report(7, "determinism across parallelism", c);
}

void criterion_rho(const StudySummary& study) {
  Outcome c;
  const auto& similar = find(study, Heterogeneity::None, Magnitude::Low);
  const auto& different = find(study, Heterogeneity::High, Magnitude::High);
  const std::size_t seeds = 20;
  if (similar.rho.size() < seeds || different.rho.size() < seeds) {
    c.require(false, "fewer than 20 successful replications");
  } else {
    const double a = std::accumulate(similar.rho.begin(), similar.rho.begin() + seeds, 0.0) / seeds;
    const double b =
        std::accumulate(different.rho.begin(), different.rho.begin() + seeds, 0.0) / seeds;
    c.detail << " mean rho None/low=" << fmt(a) << " High/high=" << fmt(b)
             << " gap=" << fmt(a - b);
    c.require(a - b >= 0.1, "gap below 0.1");
  }
  report(8, "rho lower under heterogeneity", c);
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  criterion_weight_formulas();
  criterion_oracles();
  criterion_dgp_moments();
  criterion_determinism();

  std::vector<SimScenario> scenarios;
  for (auto [h, m] : {std::pair{Heterogeneity::High, Magnitude::High},
                      {Heterogeneity::High, Magnitude::Mid},
                      {Heterogeneity::None, Magnitude::Low},
                      {Heterogeneity::None, Magnitude::Mid},
                      {Heterogeneity::None, Magnitude::High}}) {
    scenarios.push_back(scenario_from_tables(h, m, 0.2, PropensityRegime::Different));
  }
  const auto study = run_study(scenarios, 100, 20240601, 0, HarnessOptions::desk_scale());
  criterion_high_heterogeneity(study);
  criterion_no_heterogeneity(study);
  criterion_rho(study);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (failures == 0 ? "ALL PASS" : "SOME FAILED") << " (" << fmt(seconds) << " s)"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
