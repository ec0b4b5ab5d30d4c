#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mcf/harness.hpp"

namespace mcf {

inline constexpr const char* kLongCsvName = "replications.csv";
inline constexpr const char* kSummaryCsvName = "summary.csv";
inline constexpr const char* kFailuresCsvName = "failures.csv";
inline constexpr const char* kBoxplotName = "rmse_boxplot.svg";

/// Long format: scenario,estimator,seed,rho,rmse; one row per successful
/// replication and estimator, ordered by scenario, replication, estimator.
void write_long_csv(const StudySummary& summary, std::ostream& out);

/// scenario,estimator,replications,failures,mean,median,q1,q3,min,max
void write_summary_csv(const StudySummary& summary, std::ostream& out);

/// Writes replications.csv, summary.csv and failures.csv into `dir`.
void emit_csv(const StudySummary& summary, const std::filesystem::path& dir);

/// Rebuilds a summary from a long-format file (plus failures.csv next to it,
/// when present).
StudySummary read_long_csv(const std::filesystem::path& path);

/// Box plots laid out as a 3x3 grid per regime: columns are heterogeneity
/// levels, rows are magnitudes, one box per estimator in each panel.
void write_boxplot_svg(const StudySummary& summary, std::ostream& out);
void emit_boxplot_svg(const StudySummary& summary, const std::filesystem::path& path);

}  // namespace mcf
