#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "mcf/harness.hpp"
#include "mcf/report.hpp"
#include "mcf/stats.hpp"

namespace mcf {
namespace {

namespace fs = std::filesystem;

HarnessOptions tiny_options() {
  HarnessOptions o;
  o.mcf.causal.num_trees = 20;
  o.mcf.propensity.num_trees = 10;
  return o;
}

SimScenario small(Heterogeneity h, Magnitude m) {
  auto s = scenario_from_tables(h, m, 0.2, PropensityRegime::Different);
  s.n_primary = 120;
  s.n_aux = 120;
  return s;
}

std::vector<SimScenario> three_scenarios() {
  return {small(Heterogeneity::None, Magnitude::Low), small(Heterogeneity::Medium, Magnitude::Mid),
          small(Heterogeneity::High, Magnitude::High)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Rmse, Examples) {
  const std::vector<double> a = {1, 2, 3};
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{1, 1}, std::vector<double>{0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{3, 0}, std::vector<double>{0, 4}), std::sqrt(12.5));
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(rmse(a, std::vector<double>{1}), std::invalid_argument);
}

TEST(Replication, ReportsAllSixEstimators) {
  auto r = run_replication(small(Heterogeneity::High, Magnitude::Mid), 5, tiny_options());
  ASSERT_TRUE(r.ok()) << *r.error;
  ASSERT_EQ(r.rmse.size(), 6u);
  for (const auto& [kind, value] : r.rmse) {
    EXPECT_TRUE(std::isfinite(value)) << to_string(kind);
    EXPECT_GE(value, 0.0);
  }
  EXPECT_GE(r.rho, 0.0);
  EXPECT_LE(r.rho, 1.0);
  EXPECT_NE(r.fit_summary.find("rho = "), std::string::npos);
}

TEST(Replication, DeterministicGivenSeed) {
  auto s = small(Heterogeneity::Medium, Magnitude::Low);
  auto a = run_replication(s, 77, tiny_options());
  auto b = run_replication(s, 77, tiny_options());
  EXPECT_EQ(a.rmse, b.rmse);
  EXPECT_EQ(a.rho, b.rho);
  auto c = run_replication(s, 78, tiny_options());
  EXPECT_NE(a.rmse, c.rmse);
}

TEST(Replication, TruthAsPredictionHasZeroRmse) {
  // Re-derive the replication's test half and score tau_true against itself.
  auto s = small(Heterogeneity::None, Magnitude::Low);
  const std::uint64_t seed = 9;
  auto pair = generate_pair(s, derive_seed(seed, {1}));
  auto split = split_train_test(pair.primary, SplitSpec{0.5, derive_seed(seed, {2})});
  EXPECT_EQ(split.test.size(), 60u);
  EXPECT_EQ(rmse(*split.test.tau_true(), *split.test.tau_true()), 0.0);
}

TEST(Replication, FailureIsCapturedNotThrown) {
  auto s = scenario_from_tables(Heterogeneity::None, Magnitude::Low, 0.2,
                                PropensityRegime::Different, 3);
  ReplicationResult r;
  EXPECT_NO_THROW(r = run_replication(s, 1, tiny_options()));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.rmse.empty());
  EXPECT_NE(r.error->find("4 covariates"), std::string::npos) << *r.error;
}

TEST(ReplicationSeed, DistinctAcrossScenariosAndReps) {
  std::set<std::uint64_t> seeds;
  for (std::size_t s = 0; s < 18; ++s) {
    for (std::size_t rep = 0; rep < 500; ++rep) seeds.insert(replication_seed(42, s, rep));
  }
  EXPECT_EQ(seeds.size(), 18u * 500u);
  EXPECT_NE(replication_seed(1, 0, 0), replication_seed(2, 0, 0));
}

TEST(Study, OutputIndependentOfParallelism) {
  auto scenarios = three_scenarios();
  auto serial = run_study(scenarios, 2, 11, 1, tiny_options());
  auto parallel = run_study(scenarios, 2, 11, 8, tiny_options());
  std::ostringstream a, b, sa, sb;
  write_long_csv(serial, a);
  write_long_csv(parallel, b);
  write_summary_csv(serial, sa);
  write_summary_csv(parallel, sb);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(sa.str(), sb.str());

  // 3 scenarios x 2 replications x 6 estimators, plus the header.
  std::size_t lines = 0;
  std::istringstream in(a.str());
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 37u);
}

TEST(Study, CsvRereadsToTwelveDigits) {
  auto scenarios = three_scenarios();
  auto summary = run_study(scenarios, 2, 12, 1, tiny_options());
  const auto dir = fresh_dir("mcf_harness_csv");
  emit_csv(summary, dir);
  auto back = read_long_csv(dir / kLongCsvName);
  ASSERT_EQ(back.results.size(), summary.results.size());
  for (std::size_t i = 0; i < summary.results.size(); ++i) {
    const auto& r = summary.results[i];
    const auto& q = back.results[i];
    EXPECT_EQ(q.scenario_id, r.scenario_id);
    EXPECT_EQ(q.seed, r.seed);
    EXPECT_NEAR(q.rho, r.rho, 1e-12 * std::max(1.0, std::abs(r.rho)));
    for (const auto& [kind, value] : r.rmse) {
      EXPECT_NEAR(q.rmse.at(kind), value, 1e-12 * std::max(1.0, value));
    }
  }
  fs::remove_all(dir);
}

TEST(Study, SummaryMatchesRecomputation) {
  auto scenarios = three_scenarios();
  auto summary = run_study(scenarios, 3, 13, 1, tiny_options());
  ASSERT_EQ(summary.scenarios.size(), 3u);
  EXPECT_EQ(summary.reps_per_scenario, 3u);
  for (const auto& s : summary.scenarios) {
    EXPECT_EQ(s.replications, 3u);
    EXPECT_EQ(s.failures, 0u);
    for (EstimatorKind kind : kAllEstimators) {
      std::vector<double> sample;
      for (const auto& r : summary.results) {
        if (r.scenario_id == s.id) sample.push_back(r.rmse.at(kind));
      }
      const auto& e = s.estimators.at(kind);
      EXPECT_EQ(e.sample, sample);
      std::sort(sample.begin(), sample.end());
      EXPECT_NEAR(e.mean, (sample[0] + sample[1] + sample[2]) / 3.0, 1e-12);
      EXPECT_EQ(e.median, sample[1]);
      EXPECT_EQ(e.min, sample[0]);
      EXPECT_EQ(e.max, sample[2]);
      EXPECT_NEAR(e.q1, (sample[0] + sample[1]) / 2.0, 1e-12);
      EXPECT_NEAR(e.q3, (sample[1] + sample[2]) / 2.0, 1e-12);
    }
  }
}

TEST(Study, FailedReplicationsAreRecorded) {
  auto good = small(Heterogeneity::None, Magnitude::Low);
  auto bad = scenario_from_tables(Heterogeneity::None, Magnitude::Low, 0.2,
                                  PropensityRegime::Different, 3);
  bad.name = "broken";
  auto summary = run_study({good, bad}, 2, 14, 1, tiny_options());
  ASSERT_EQ(summary.scenarios.size(), 2u);
  EXPECT_EQ(summary.scenarios[1].failures, 2u);
  EXPECT_EQ(summary.scenarios[0].failures, 0u);

  const auto dir = fresh_dir("mcf_harness_failures");
  emit_csv(summary, dir);
  const std::string failures = slurp(dir / kFailuresCsvName);
  EXPECT_NE(failures.find("broken,"), std::string::npos) << failures;
  auto back = read_long_csv(dir / kLongCsvName);
  std::size_t failed = 0;
  for (const auto& s : back.scenarios) failed += s.failures;
  EXPECT_EQ(failed, 2u);
  fs::remove_all(dir);
}

TEST(Study, RejectsZeroReplications) {
  EXPECT_THROW(run_study(three_scenarios(), 0, 1, 1, tiny_options()), std::invalid_argument);
}

TEST(Boxplot, SixBoxesPerPanelInThreeByThreeGrid) {
  std::vector<SimScenario> grid;
  for (auto s : scenario_grid(0.2, PropensityRegime::Different)) {
    s.n_primary = 100;
    s.n_aux = 100;
    grid.push_back(s);
  }
  auto summary = run_study(grid, 2, 15, 1, tiny_options());
  std::ostringstream svg;
  write_boxplot_svg(summary, svg);
  const std::string text = svg.str();
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  std::regex panel_re("<g class=\"panel\"");
  std::regex box_re("<rect class=\"box\"");
  const auto panels = std::distance(std::sregex_iterator(text.begin(), text.end(), panel_re),
                                    std::sregex_iterator());
  const auto boxes = std::distance(std::sregex_iterator(text.begin(), text.end(), box_re),
                                   std::sregex_iterator());
  EXPECT_EQ(panels, 9);
  EXPECT_EQ(boxes, 9 * 6);
  for (EstimatorKind kind : kAllEstimators) {
    EXPECT_NE(text.find("data-estimator=\"" + std::string(to_string(kind)) + "\""),
              std::string::npos);
  }
}

}  // namespace
}  // namespace mcf
