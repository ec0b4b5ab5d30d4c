#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcf/dataset.hpp"
#include "mcf/random.hpp"

namespace mcf {

/// Between-study heterogeneity level: None = same parameters, Medium = similar,
/// High = different.
enum class Heterogeneity { None, Medium, High };
enum class Magnitude { Low, Mid, High };
enum class PropensityRegime { Common, Different };

std::string_view to_string(Heterogeneity h);
std::string_view to_string(Magnitude m);
std::string_view to_string(PropensityRegime r);

/// Coefficients of one study's data-generating process.
///   Z ~ Bernoulli(expit(beta_zx * eta(x)))
///   tau(x) = beta_yz + x . beta_yzx
///   Y = x . beta_yx + Z tau(x) + N(0, 1)
struct CoefficientBlock {
  std::vector<double> beta_yzx;
  double beta_zx = 0.0;
  double beta_yz = 0.0;
  std::vector<double> beta_yx;

  friend bool operator==(const CoefficientBlock&, const CoefficientBlock&) = default;
};

struct SimScenario {
  std::string name;
  Heterogeneity heterogeneity = Heterogeneity::None;
  Magnitude magnitude = Magnitude::Low;
  double cov_rho = 0.2;
  PropensityRegime ps_regime = PropensityRegime::Different;
  std::size_t n_primary = 500;
  std::size_t n_aux = 500;
  std::size_t p = 10;
  /// Subtract E[x2^2] = 1 in the auxiliary study's alternative assignment model.
  bool center_square = true;
  CoefficientBlock primary;
  CoefficientBlock auxiliary;

  friend bool operator==(const SimScenario&, const SimScenario&) = default;
};

/// Canonical preset name, e.g. "high-heterogeneity/mid/rho0.2/diff-ps".
std::string preset_name(Heterogeneity h, Magnitude m, double cov_rho, PropensityRegime r);

/// Coefficients copied from the published coefficient tables, zero-padded to p.
SimScenario scenario_from_tables(Heterogeneity h, Magnitude m, double cov_rho,
                                 PropensityRegime regime, std::size_t p = 10);

/// Parses a preset name; nullopt when the name is not a preset.
std::optional<SimScenario> scenario_from_preset(std::string_view name);

/// The nine (heterogeneity, magnitude) presets of one covariate-correlation and
/// propensity regime, in panel order (magnitude-major).
std::vector<SimScenario> scenario_grid(double cov_rho, PropensityRegime regime);

/// Preset name, "grid/rho<r>/<ps>" for a whole grid, or a scenario file path.
std::vector<SimScenario> resolve_scenarios(const std::string& spec);

/// key = value text; '#' starts a comment. Keys: name, heterogeneity,
/// magnitude, cov_rho, ps_regime, n_primary, n_aux, p, center_square,
/// preset, {primary,auxiliary}.{beta_yzx,beta_zx,beta_yz,beta_yx}. A `preset`
/// key loads table coefficients that later keys may override.
SimScenario read_scenario_file(const std::filesystem::path& path);
SimScenario parse_scenario(std::istream& in);
void write_scenario(std::ostream& out, const SimScenario& scenario);

/// n draws from N(0, Sigma_rho) with unit diagonal and cov_rho off-diagonal.
/// Throws when Sigma_rho is not positive definite.
Matrix generate_covariates(std::size_t n, std::size_t p, double cov_rho, Rng& rng);

/// Linear predictor of the assignment model before scaling by beta_zx.
double assignment_index(std::span<const double> x, const SimScenario& scenario, Study study);

std::vector<std::uint8_t> assign_treatment(const Matrix& x, const SimScenario& scenario,
                                           Study study, Rng& rng);

struct GeneratedOutcome {
  std::vector<double> y;
  std::vector<double> tau_true;
};

std::vector<double> true_cate(const Matrix& x, const CoefficientBlock& block);

GeneratedOutcome generate_outcome(const Matrix& x, std::span<const std::uint8_t> z,
                                  const CoefficientBlock& block, Rng& rng);

struct GeneratedPair {
  StudyDataset primary;
  StudyDataset auxiliary;
};

GeneratedPair generate_pair(const SimScenario& scenario, std::uint64_t seed);

}  // namespace mcf
