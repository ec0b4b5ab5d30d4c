// Command-line front end: simulate, generate, fit, report.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcf/dataset.hpp"
#include "mcf/harness.hpp"
#include "mcf/mcf.hpp"
#include "mcf/report.hpp"
#include "mcf/simgen.hpp"

namespace {

struct CliError : std::runtime_error {
  CliError(std::string code, const std::string& message)
      : std::runtime_error(message), code(std::move(code)) {}
  std::string code;
};

int fail(const std::string& code, const std::string& message, int exit_code = 1) {
  nlohmann::json j = {{"error", code}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return exit_code;
}

int env_threads(int fallback) {
  if (const char* env = std::getenv("MCF_THREADS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (...) {
    }
    throw CliError("bad_env", std::string("MCF_THREADS must be a positive integer, got '") + env + "'");
  }
  return fallback;
}

std::vector<mcf::SimScenario> collect_scenarios(const std::vector<std::string>& specs) {
  std::vector<mcf::SimScenario> out;
  for (const auto& spec : specs) {
    try {
      auto resolved = mcf::resolve_scenarios(spec);
      out.insert(out.end(), resolved.begin(), resolved.end());
    } catch (const std::exception& e) {
      throw CliError("bad_scenario", e.what());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-study causal forest: simulation harness and estimator CLI"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run replications of one or more scenarios");
  std::vector<std::string> sim_scenarios;
  std::size_t reps = 0;
  std::uint64_t sim_seed = 20240101;
  std::string sim_out;
  int parallel = 0;
  bool full_scale = false;
  std::size_t causal_trees = 0;
  std::size_t propensity_trees = 0;
  simulate
      ->add_option("--scenario", sim_scenarios,
                   "Preset (e.g. high-heterogeneity/mid/rho0.2/diff-ps), grid/rho0.2/diff-ps, or a "
                   "scenario file; repeatable")
      ->required();
  simulate->add_option("--reps", reps, "Replications per scenario (default 100, 500 with --full-scale)");
  simulate->add_option("--seed", sim_seed, "Master seed");
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--parallel", parallel, "Concurrent replications (MCF_THREADS overrides)");
  simulate->add_flag("--full-scale", full_scale, "500 replications, 2000 causal / 500 propensity trees");
  simulate->add_option("--causal-trees", causal_trees, "Override the causal forest size");
  simulate->add_option("--propensity-trees", propensity_trees, "Override the propensity forest size");

  // generate
  auto* generate = app.add_subcommand("generate", "Write one simulated primary/auxiliary pair as CSV");
  std::string gen_scenario;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  generate->add_option("--scenario", gen_scenario, "Preset name or scenario file")->required();
  generate->add_option("--seed", gen_seed, "Seed");
  generate->add_option("--out", gen_out, "Output CSV (primary rows s=0, auxiliary rows s=1)")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit all six estimators and predict CATEs on a test set");
  std::string train_path, aux_path, test_path, fit_out;
  std::uint64_t fit_seed = 42;
  bool oob_rho = false;
  std::size_t fit_causal_trees = 500;
  std::size_t fit_propensity_trees = 200;
  fit->add_option("--train", train_path, "Primary training CSV")->required();
  fit->add_option("--aux", aux_path, "Auxiliary CSV")->required();
  fit->add_option("--test", test_path, "Test CSV")->required();
  fit->add_option("--out", fit_out, "Prediction CSV (one column per estimator)")->required();
  fit->add_option("--seed", fit_seed, "Master seed");
  fit->add_option("--causal-trees", fit_causal_trees, "Trees per causal forest");
  fit->add_option("--propensity-trees", fit_propensity_trees, "Trees in the propensity forest");
  fit->add_flag("--oob-rho", oob_rho, "Use out-of-bag training predictions for rho");

  // report
  auto* report = app.add_subcommand("report", "Re-aggregate a simulate output directory");
  std::string report_in;
  bool report_svg = false;
  report->add_option("--in", report_in, "Directory containing replications.csv")->required();
  report->add_flag("--svg", report_svg, "Also write rmse_boxplot.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*simulate) {
      auto scenarios = collect_scenarios(sim_scenarios);
      mcf::HarnessOptions options =
          full_scale ? mcf::HarnessOptions::full_scale() : mcf::HarnessOptions::desk_scale();
      if (causal_trees) options.mcf.causal.num_trees = causal_trees;
      if (propensity_trees) options.mcf.propensity.num_trees = propensity_trees;
      if (reps == 0) reps = full_scale ? 500 : 100;
      const int threads = env_threads(parallel);

      auto summary = mcf::run_study(scenarios, reps, sim_seed, threads, options);
      const std::filesystem::path dir(sim_out);
      mcf::emit_csv(summary, dir);
      mcf::emit_boxplot_svg(summary, dir / mcf::kBoxplotName);
      std::ofstream log(dir / "fits.log");
      for (const auto& r : summary.results) {
        log << "[" << r.scenario_id << " rep=" << r.rep << " seed=" << r.seed << "]\n";
        if (r.ok()) {
          log << r.fit_summary << "time.generate = " << r.wall_time.generate_seconds
              << "\ntime.fit = " << r.wall_time.fit_seconds
              << "\ntime.predict = " << r.wall_time.predict_seconds << "\n\n";
        } else {
          log << "error = " << *r.error << "\n\n";
        }
      }
      for (const auto& s : summary.scenarios) {
        std::cout << s.id << " (" << s.replications - s.failures << "/" << s.replications << " ok)";
        for (const auto& [kind, e] : s.estimators) {
          std::cout << "  " << mcf::to_string(kind) << "=" << e.mean;
        }
        std::cout << '\n';
      }
    } else if (*generate) {
      auto scenarios = collect_scenarios({gen_scenario});
      if (scenarios.size() != 1) throw CliError("bad_scenario", "generate needs exactly one scenario");
      auto pair = mcf::generate_pair(scenarios.front(), gen_seed);
      mcf::write_csv(mcf::concat(pair.primary, pair.auxiliary), std::filesystem::path(gen_out));
    } else if (*fit) {
      auto load = [](const std::string& path) {
        auto data = mcf::read_csv(std::filesystem::path(path));
        mcf::require_valid(data, path);
        return data;
      };
      const auto train = load(train_path);
      const auto aux = load(aux_path);
      const auto test = mcf::read_csv(std::filesystem::path(test_path));
      mcf::McfOptions options;
      options.seed = fit_seed;
      options.causal.num_trees = fit_causal_trees;
      options.propensity.num_trees = fit_propensity_trees;
      options.oob_correlation = oob_rho;
      options.num_threads = env_threads(0);
      const auto model = mcf::fit_mcf(train, aux, options);
      const auto predictions = mcf::predict_all(model, test, options.num_threads);

      std::ofstream out(fit_out, std::ios::binary);
      if (!out) throw CliError("io", "cannot open " + fit_out + " for writing");
      out.precision(17);
      for (std::size_t k = 0; k < mcf::kAllEstimators.size(); ++k) {
        out << (k ? "," : "") << mcf::to_string(mcf::kAllEstimators[k]);
      }
      if (test.has_tau_true()) out << ",tau_true";
      out << '\n';
      for (std::size_t i = 0; i < test.size(); ++i) {
        for (std::size_t k = 0; k < mcf::kAllEstimators.size(); ++k) {
          out << (k ? "," : "") << predictions.at(mcf::kAllEstimators[k])[i];
        }
        if (test.has_tau_true()) out << ',' << (*test.tau_true())[i];
        out << '\n';
      }
      std::cout << mcf::summarize(model);
    } else if (*report) {
      const std::filesystem::path dir(report_in);
      auto summary = mcf::read_long_csv(dir / mcf::kLongCsvName);
      std::ofstream out(dir / mcf::kSummaryCsvName, std::ios::binary);
      if (!out) throw CliError("io", "cannot write summary in " + report_in);
      mcf::write_summary_csv(summary, out);
      if (report_svg) mcf::emit_boxplot_svg(summary, dir / mcf::kBoxplotName);
    }
  } catch (const CliError& e) {
    return fail(e.code, e.what());
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
