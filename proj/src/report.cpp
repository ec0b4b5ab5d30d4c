#include "mcf/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mcf {

namespace {

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, end);
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": cannot parse '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": cannot parse '" + s + "'");
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_long_csv(const StudySummary& summary, std::ostream& out) {
  out << "scenario,estimator,seed,rho,rmse\n";
  for (const auto& r : summary.results) {
    if (!r.ok()) continue;
    for (EstimatorKind kind : kAllEstimators) {
      auto it = r.rmse.find(kind);
      if (it == r.rmse.end()) continue;
      out << csv_field(r.scenario_id) << ',' << to_string(kind) << ',' << r.seed << ','
          << num(r.rho) << ',' << num(it->second) << '\n';
    }
  }
}

void write_summary_csv(const StudySummary& summary, std::ostream& out) {
  out << "scenario,estimator,replications,failures,mean,median,q1,q3,min,max\n";
  for (const auto& s : summary.scenarios) {
    for (EstimatorKind kind : kAllEstimators) {
      auto it = s.estimators.find(kind);
      if (it == s.estimators.end()) continue;
      const EstimatorSummary& e = it->second;
      out << csv_field(s.id) << ',' << to_string(kind) << ',' << s.replications << ','
          << s.failures << ',' << num(e.mean) << ',' << num(e.median) << ',' << num(e.q1) << ','
          << num(e.q3) << ',' << num(e.min) << ',' << num(e.max) << '\n';
    }
  }
}

void emit_csv(const StudySummary& summary, const std::filesystem::path& dir) {
  if (summary.scenarios.empty()) throw std::invalid_argument("emit_csv: empty summary");
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / kLongCsvName);
    write_long_csv(summary, out);
  }
  {
    auto out = open_out(dir / kSummaryCsvName);
    write_summary_csv(summary, out);
  }
  auto out = open_out(dir / kFailuresCsvName);
  out << "scenario,seed,error\n";
  for (const auto& r : summary.results) {
    if (!r.ok()) out << csv_field(r.scenario_id) << ',' << r.seed << ',' << csv_field(*r.error) << '\n';
  }
}

StudySummary read_long_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || parse_csv_line(line) !=
                                     std::vector<std::string>{"scenario", "estimator", "seed",
                                                              "rho", "rmse"}) {
    throw std::runtime_error(path.string() + ": expected header scenario,estimator,seed,rho,rmse");
  }

  std::vector<ReplicationResult> results;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(row);
    auto f = parse_csv_line(line);
    if (f.size() != 5) throw std::runtime_error(where + ": expected 5 fields");
    auto kind = parse_estimator(f[1]);
    if (!kind) throw std::runtime_error(where + ": unknown estimator '" + f[1] + "'");
    const std::uint64_t seed = parse_u64(f[2], where);
    auto [it, inserted] = index.try_emplace({f[0], seed}, results.size());
    if (inserted) {
      ReplicationResult r;
      r.scenario_id = f[0];
      r.seed = seed;
      r.rho = parse_double(f[3], where);
      results.push_back(std::move(r));
    }
    results[it->second].rmse[*kind] = parse_double(f[4], where);
  }

  const auto failures_path = path.parent_path() / kFailuresCsvName;
  if (std::ifstream fin(failures_path, std::ios::binary); fin) {
    std::getline(fin, line);
    while (std::getline(fin, line)) {
      if (line.empty()) continue;
      auto f = parse_csv_line(line);
      if (f.size() != 3) continue;
      ReplicationResult r;
      r.scenario_id = f[0];
      r.seed = parse_u64(f[1], failures_path.string());
      r.error = f[2];
      results.push_back(std::move(r));
    }
  }

  std::vector<SimScenario> scenarios;
  for (const auto& r : results) {
    if (auto s = scenario_from_preset(r.scenario_id)) scenarios.push_back(*s);
  }
  return summarize_results(std::move(results), scenarios);
}

void write_boxplot_svg(const StudySummary& summary, std::ostream& out) {
  constexpr double kPanelW = 300, kPanelH = 220, kMargin = 40, kGroupTitle = 30;
  constexpr const char* kColors[6] = {"#4e79a7", "#f28e2b", "#e15759",
                                      "#76b7b2", "#59a14f", "#edc948"};

  // Place each scenario in a (group, row, column) cell.
  struct Cell {
    const ScenarioSummary* scenario;
    std::size_t row;
    std::size_t col;
  };
  std::vector<std::pair<std::string, std::vector<Cell>>> groups;
  auto group_for = [&](const std::string& key) -> std::vector<Cell>& {
    for (auto& [k, cells] : groups) {
      if (k == key) return cells;
    }
    groups.emplace_back(key, std::vector<Cell>{});
    return groups.back().second;
  };
  std::size_t other = 0;
  for (const auto& s : summary.scenarios) {
    std::optional<SimScenario> sc = s.scenario;
    if (!sc) sc = scenario_from_preset(s.id);
    if (!sc) {
      group_for("other").push_back({&s, other / 3, other % 3});
      ++other;
      continue;
    }
    std::string key = "rho" + short_num(sc->cov_rho) + " / " + std::string(to_string(sc->ps_regime));
    const auto row = static_cast<std::size_t>(sc->magnitude);
    const auto col = static_cast<std::size_t>(sc->heterogeneity);
    // A second scenario for an occupied cell opens a new grid.
    for (int copy = 2;; ++copy) {
      auto& cells = group_for(key);
      if (std::none_of(cells.begin(), cells.end(),
                       [&](const Cell& c) { return c.row == row && c.col == col; })) {
        cells.push_back({&s, row, col});
        break;
      }
      key = key.substr(0, key.find(" #")) + " #" + std::to_string(copy);
    }
  }

  std::vector<double> group_top;
  double height = 0;
  for (const auto& [key, cells] : groups) {
    std::size_t rows = 0;
    for (const auto& c : cells) rows = std::max(rows, c.row + 1);
    group_top.push_back(height);
    height += kGroupTitle + static_cast<double>(rows) * kPanelH;
  }
  const double width = 3 * kPanelW;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height + 40 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < kAllEstimators.size(); ++k) {
    const double lx = 10 + static_cast<double>(k) * 140;
    out << "<rect x=\"" << lx << "\" y=\"" << height + 15 << "\" width=\"10\" height=\"10\" fill=\""
        << kColors[k] << "\"/><text x=\"" << lx + 14 << "\" y=\"" << height + 24 << "\">"
        << to_string(kAllEstimators[k]) << "</text>\n";
  }

  static constexpr const char* kColTitle[3] = {"none", "medium", "high"};
  static constexpr const char* kRowTitle[3] = {"low", "mid", "high"};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& [key, cells] = groups[g];
    out << "<text x=\"10\" y=\"" << group_top[g] + 20 << "\" font-size=\"14\">"
        << xml_escape(key) << "</text>\n";
    for (const Cell& cell : cells) {
      const ScenarioSummary& s = *cell.scenario;
      const double x0 = static_cast<double>(cell.col) * kPanelW;
      const double y0 = group_top[g] + kGroupTitle + static_cast<double>(cell.row) * kPanelH;
      double lo = 0.0, hi = 0.0;
      bool first = true;
      for (const auto& [kind, e] : s.estimators) {
        if (e.sample.empty()) continue;
        lo = first ? e.min : std::min(lo, e.min);
        hi = first ? e.max : std::max(hi, e.max);
        first = false;
      }
      if (hi <= lo) hi = lo + 1.0;
      const double plot_top = y0 + 20, plot_bottom = y0 + kPanelH - 25;
      auto ypos = [&](double v) { return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top); };

      const std::string title = other && key == "other"
                                    ? s.id
                                    : std::string(kColTitle[cell.col]) + " / " + kRowTitle[cell.row];
      out << "<g class=\"panel\" data-scenario=\"" << xml_escape(s.id) << "\">\n";
      out << "<rect x=\"" << x0 + kMargin << "\" y=\"" << plot_top << "\" width=\""
          << kPanelW - kMargin - 10 << "\" height=\"" << plot_bottom - plot_top
          << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
      out << "<text x=\"" << x0 + kMargin << "\" y=\"" << y0 + 14 << "\">" << xml_escape(title)
          << " (n=" << s.replications - s.failures << ")</text>\n";
      out << "<text x=\"" << x0 + 2 << "\" y=\"" << plot_top + 8 << "\">" << short_num(hi)
          << "</text><text x=\"" << x0 + 2 << "\" y=\"" << plot_bottom << "\">" << short_num(lo)
          << "</text>\n";
      const double slot = (kPanelW - kMargin - 10) / 6.0;
      for (std::size_t k = 0; k < kAllEstimators.size(); ++k) {
        auto it = s.estimators.find(kAllEstimators[k]);
        if (it == s.estimators.end() || it->second.sample.empty()) continue;
        const EstimatorSummary& e = it->second;
        const double cx = x0 + kMargin + slot * (static_cast<double>(k) + 0.5);
        const double bw = slot * 0.6;
        out << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << ypos(e.min) << "\" y2=\""
            << ypos(e.max) << "\" stroke=\"#333\"/>\n";
        out << "<rect class=\"box\" data-estimator=\"" << to_string(kAllEstimators[k]) << "\" x=\""
            << cx - bw / 2 << "\" y=\"" << ypos(e.q3) << "\" width=\"" << bw << "\" height=\""
            << std::max(0.5, ypos(e.q1) - ypos(e.q3)) << "\" fill=\"" << kColors[k]
            << "\" stroke=\"#333\"/>\n";
        out << "<line x1=\"" << cx - bw / 2 << "\" x2=\"" << cx + bw / 2 << "\" y1=\""
            << ypos(e.median) << "\" y2=\"" << ypos(e.median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
      }
      out << "</g>\n";
    }
  }
  out << "</svg>\n";
}

void emit_boxplot_svg(const StudySummary& summary, const std::filesystem::path& path) {
  if (summary.scenarios.empty()) throw std::invalid_argument("emit_boxplot_svg: empty summary");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = open_out(path);
  write_boxplot_svg(summary, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace mcf
