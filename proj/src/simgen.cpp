#include "mcf/simgen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace mcf {

std::string_view to_string(Heterogeneity h) {
  switch (h) {
    case Heterogeneity::None: return "none";
    case Heterogeneity::Medium: return "medium";
    case Heterogeneity::High: return "high";
  }
  return "?";
}

std::string_view to_string(Magnitude m) {
  switch (m) {
    case Magnitude::Low: return "low";
    case Magnitude::Mid: return "mid";
    case Magnitude::High: return "high";
  }
  return "?";
}

std::string_view to_string(PropensityRegime r) {
  return r == PropensityRegime::Common ? "common-ps" : "diff-ps";
}

namespace {

std::string format_real(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<double> padded(std::initializer_list<double> head, std::size_t p) {
  std::vector<double> v(head);
  if (v.size() > p) throw std::invalid_argument("scenario: p is smaller than the table vectors");
  v.resize(p, 0.0);
  return v;
}

std::optional<Heterogeneity> parse_heterogeneity(std::string_view s) {
  if (s == "none") return Heterogeneity::None;
  if (s == "medium") return Heterogeneity::Medium;
  if (s == "high") return Heterogeneity::High;
  return std::nullopt;
}

std::optional<Magnitude> parse_magnitude(std::string_view s) {
  if (s == "low") return Magnitude::Low;
  if (s == "mid") return Magnitude::Mid;
  if (s == "high") return Magnitude::High;
  return std::nullopt;
}

std::optional<PropensityRegime> parse_regime(std::string_view s) {
  if (s == "diff-ps" || s == "different") return PropensityRegime::Different;
  if (s == "common-ps" || s == "common") return PropensityRegime::Common;
  return std::nullopt;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string preset_name(Heterogeneity h, Magnitude m, double cov_rho, PropensityRegime r) {
  return std::string(to_string(h)) + "-heterogeneity/" + std::string(to_string(m)) + "/rho" +
         format_real(cov_rho) + "/" + std::string(to_string(r));
}

SimScenario scenario_from_tables(Heterogeneity h, Magnitude m, double cov_rho,
                                 PropensityRegime regime, std::size_t p) {
  SimScenario s;
  s.name = preset_name(h, m, cov_rho, regime);
  s.heterogeneity = h;
  s.magnitude = m;
  s.cov_rho = cov_rho;
  s.ps_regime = regime;
  s.p = p;

  // The primary study uses the same coefficients in every table row.
  s.primary = {padded({1.0}, p), 0.5, 0.5, padded({1.0, 1.0, 1.0}, p)};

  // Auxiliary assignment, main-effect and prognostic coefficients depend only on
  // the magnitude row.
  const double level = m == Magnitude::Low ? 0.5 : m == Magnitude::Mid ? 1.5 : 2.0;
  const double prognostic = m == Magnitude::Low ? 1.0 : level;
  s.auxiliary.beta_zx = level;
  s.auxiliary.beta_yz = level;
  s.auxiliary.beta_yx = padded({prognostic, prognostic, prognostic}, p);

  switch (h) {
    case Heterogeneity::None:
      s.auxiliary.beta_yzx = padded({1.0}, p);
      break;
    case Heterogeneity::Medium: {
      const double v = m == Magnitude::Low ? 0.25 : m == Magnitude::Mid ? 0.375 : 0.5;
      s.auxiliary.beta_yzx = padded({v, v, v, v}, p);
      break;
    }
    case Heterogeneity::High:
      s.auxiliary.beta_yzx = padded({0.0, level, level, level}, p);
      break;
  }
  return s;
}

std::optional<SimScenario> scenario_from_preset(std::string_view name) {
  auto parts = split(name, '/');
  if (parts.size() != 4) return std::nullopt;
  constexpr std::string_view suffix = "-heterogeneity";
  std::string_view het = parts[0];
  if (!het.ends_with(suffix)) return std::nullopt;
  het.remove_suffix(suffix.size());
  auto h = parse_heterogeneity(het);
  auto m = parse_magnitude(parts[1]);
  auto r = parse_regime(parts[3]);
  if (!h || !m || !r || !parts[2].starts_with("rho")) return std::nullopt;
  auto rho = parse_real(parts[2].substr(3));
  if (!rho) return std::nullopt;
  return scenario_from_tables(*h, *m, *rho, *r);
}

std::vector<SimScenario> scenario_grid(double cov_rho, PropensityRegime regime) {
  std::vector<SimScenario> grid;
  for (Magnitude m : {Magnitude::Low, Magnitude::Mid, Magnitude::High}) {
    for (Heterogeneity h : {Heterogeneity::None, Heterogeneity::Medium, Heterogeneity::High}) {
      grid.push_back(scenario_from_tables(h, m, cov_rho, regime));
    }
  }
  return grid;
}

std::vector<SimScenario> resolve_scenarios(const std::string& spec) {
  if (auto preset = scenario_from_preset(spec)) return {*preset};
  if (spec.starts_with("grid/")) {
    auto parts = split(spec, '/');
    if (parts.size() == 3 && parts[1].starts_with("rho")) {
      auto rho = parse_real(parts[1].substr(3));
      auto regime = parse_regime(parts[2]);
      if (rho && regime) return scenario_grid(*rho, *regime);
    }
    throw std::invalid_argument("bad grid spec '" + spec + "' (expected grid/rho<r>/<diff-ps|common-ps>)");
  }
  if (std::filesystem::exists(spec)) return {read_scenario_file(spec)};
  throw std::invalid_argument("unknown scenario '" + spec + "' (not a preset, grid or file)");
}

SimScenario parse_scenario(std::istream& in) {
  SimScenario s = scenario_from_tables(Heterogeneity::None, Magnitude::Low, 0.2,
                                       PropensityRegime::Different);
  s.name.clear();
  bool named = false;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("scenario line " + std::to_string(line_no) + ": " + what);
  };
  auto vector_value = [&](const std::string& value) {
    std::vector<double> v;
    for (auto part : split(value, ',')) {
      auto x = parse_real(trim(part));
      if (!x) fail("cannot parse vector element '" + std::string(part) + "'");
      v.push_back(*x);
    }
    return v;
  };
  auto real_value = [&](const std::string& value) {
    auto x = parse_real(value);
    if (!x) fail("cannot parse number '" + value + "'");
    return *x;
  };
  auto count_value = [&](const std::string& value) {
    const double x = real_value(value);
    if (x < 1 || x != std::floor(x)) fail("expected a positive integer, got '" + value + "'");
    return static_cast<std::size_t>(x);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));

    if (key == "preset") {
      auto preset = scenario_from_preset(value);
      if (!preset) fail("unknown preset '" + value + "'");
      const std::string keep_name = s.name;
      s = *preset;
      s.name = keep_name;
    } else if (key == "name") {
      s.name = value;
      named = true;
    } else if (key == "heterogeneity") {
      auto h = parse_heterogeneity(value);
      if (!h) fail("bad heterogeneity '" + value + "'");
      s.heterogeneity = *h;
    } else if (key == "magnitude") {
      auto m = parse_magnitude(value);
      if (!m) fail("bad magnitude '" + value + "'");
      s.magnitude = *m;
    } else if (key == "ps_regime") {
      auto r = parse_regime(value);
      if (!r) fail("bad ps_regime '" + value + "'");
      s.ps_regime = *r;
    } else if (key == "cov_rho") {
      s.cov_rho = real_value(value);
    } else if (key == "n_primary") {
      s.n_primary = count_value(value);
    } else if (key == "n_aux") {
      s.n_aux = count_value(value);
    } else if (key == "p") {
      s.p = count_value(value);
    } else if (key == "center_square") {
      if (value != "true" && value != "false") fail("center_square must be true or false");
      s.center_square = value == "true";
    } else if (key.starts_with("primary.") || key.starts_with("auxiliary.")) {
      CoefficientBlock& block = key.starts_with("primary.") ? s.primary : s.auxiliary;
      const std::string field = key.substr(key.find('.') + 1);
      if (field == "beta_yzx") {
        block.beta_yzx = vector_value(value);
      } else if (field == "beta_yx") {
        block.beta_yx = vector_value(value);
      } else if (field == "beta_zx") {
        block.beta_zx = real_value(value);
      } else if (field == "beta_yz") {
        block.beta_yz = real_value(value);
      } else {
        fail("unknown coefficient '" + field + "'");
      }
    } else {
      fail("unknown key '" + key + "'");
    }
  }

  for (CoefficientBlock* block : {&s.primary, &s.auxiliary}) {
    if (block->beta_yzx.size() > s.p || block->beta_yx.size() > s.p) {
      throw std::runtime_error("scenario: coefficient vector longer than p");
    }
    block->beta_yzx.resize(s.p, 0.0);
    block->beta_yx.resize(s.p, 0.0);
  }
  if (!named) {
    // Scenarios that differ from their table preset get a distinguishable id.
    SimScenario table = scenario_from_tables(s.heterogeneity, s.magnitude, s.cov_rho,
                                             s.ps_regime, s.p);
    s.name = table.name;
    table.n_primary = s.n_primary;
    table.n_aux = s.n_aux;
    table.center_square = s.center_square;
    if (!(table == s) || s.n_primary != 500 || s.n_aux != 500 || !s.center_square || s.p != 10) {
      s.name += "/custom";
    }
  }
  return s;
}

SimScenario read_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  return parse_scenario(in);
}

void write_scenario(std::ostream& out, const SimScenario& s) {
  auto vec = [](const std::vector<double>& v) {
    std::string text;
    for (std::size_t i = 0; i < v.size(); ++i) text += (i ? "," : "") + format_real(v[i]);
    return text;
  };
  out << "name = " << s.name << '\n'
      << "heterogeneity = " << to_string(s.heterogeneity) << '\n'
      << "magnitude = " << to_string(s.magnitude) << '\n'
      << "cov_rho = " << format_real(s.cov_rho) << '\n'
      << "ps_regime = " << to_string(s.ps_regime) << '\n'
      << "n_primary = " << s.n_primary << '\n'
      << "n_aux = " << s.n_aux << '\n'
      << "p = " << s.p << '\n'
      << "center_square = " << (s.center_square ? "true" : "false") << '\n';
  for (const auto& [label, block] : {std::pair{"primary", &s.primary}, {"auxiliary", &s.auxiliary}}) {
    out << label << ".beta_yzx = " << vec(block->beta_yzx) << '\n'
        << label << ".beta_zx = " << format_real(block->beta_zx) << '\n'
        << label << ".beta_yz = " << format_real(block->beta_yz) << '\n'
        << label << ".beta_yx = " << vec(block->beta_yx) << '\n';
  }
}

Matrix generate_covariates(std::size_t n, std::size_t p, double cov_rho, Rng& rng) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(p),
                                                    static_cast<Eigen::Index>(p), cov_rho);
  sigma.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("generate_covariates: covariance with rho=" + format_real(cov_rho) +
                                " is not positive definite");
  }
  const Eigen::MatrixXd lower = llt.matrixL();

  Matrix x(n, p);
  Eigen::VectorXd draw(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < draw.size(); ++j) draw[j] = standard_normal(rng);
    const Eigen::VectorXd correlated = lower * draw;
    for (std::size_t j = 0; j < p; ++j) x(i, j) = correlated[static_cast<Eigen::Index>(j)];
  }
  return x;
}

double assignment_index(std::span<const double> x, const SimScenario& scenario, Study study) {
  if (study == Study::Auxiliary && scenario.ps_regime == PropensityRegime::Different) {
    const double square = x[1] * x[1] - (scenario.center_square ? 1.0 : 0.0);
    return square + x[2] + x[3];
  }
  return x[0];
}

std::vector<std::uint8_t> assign_treatment(const Matrix& x, const SimScenario& scenario,
                                           Study study, Rng& rng) {
  if (x.cols() < 4) throw std::invalid_argument("assign_treatment: need at least 4 covariates");
  const CoefficientBlock& block = study == Study::Primary ? scenario.primary : scenario.auxiliary;
  std::vector<std::uint8_t> z(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double eta = block.beta_zx * assignment_index(x.row(i), scenario, study);
    const double prob = 1.0 / (1.0 + std::exp(-eta));
    z[i] = uniform01(rng) < prob ? 1 : 0;
  }
  return z;
}

std::vector<double> true_cate(const Matrix& x, const CoefficientBlock& block) {
  if (block.beta_yzx.size() != x.cols()) {
    throw std::invalid_argument("true_cate: coefficient length does not match covariates");
  }
  std::vector<double> tau(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double t = block.beta_yz;
    for (std::size_t j = 0; j < x.cols(); ++j) t += x(i, j) * block.beta_yzx[j];
    tau[i] = t;
  }
  return tau;
}

GeneratedOutcome generate_outcome(const Matrix& x, std::span<const std::uint8_t> z,
                                  const CoefficientBlock& block, Rng& rng) {
  if (z.size() != x.rows() || block.beta_yx.size() != x.cols()) {
    throw std::invalid_argument("generate_outcome: dimension mismatch");
  }
  GeneratedOutcome out;
  out.tau_true = true_cate(x, block);
  out.y.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) mu += x(i, j) * block.beta_yx[j];
    mu += z[i] * out.tau_true[i];
    out.y[i] = mu + standard_normal(rng);
  }
  return out;
}

GeneratedPair generate_pair(const SimScenario& scenario, std::uint64_t seed) {
  auto study_data = [&](Study study, std::size_t n) {
    const auto sid = static_cast<std::uint64_t>(study);
    Rng cov_rng = make_rng(seed, {sid, 0});
    Rng z_rng = make_rng(seed, {sid, 1});
    Rng y_rng = make_rng(seed, {sid, 2});
    Matrix x = generate_covariates(n, scenario.p, scenario.cov_rho, cov_rng);
    auto z = assign_treatment(x, scenario, study, z_rng);
    const CoefficientBlock& block =
        study == Study::Primary ? scenario.primary : scenario.auxiliary;
    auto outcome = generate_outcome(x, z, block, y_rng);
    return StudyDataset(std::move(x), std::move(z), std::move(outcome.y),
                        std::vector<std::uint8_t>(n, static_cast<std::uint8_t>(study)),
                        std::move(outcome.tau_true));
  };
  return {study_data(Study::Primary, scenario.n_primary),
          study_data(Study::Auxiliary, scenario.n_aux)};
}

}  // namespace mcf
