#include "mcf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mcf/random.hpp"

namespace mcf {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("Matrix: value count does not match rows*cols");
  }
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

StudyDataset::StudyDataset(Matrix x, std::vector<std::uint8_t> z, std::vector<double> y,
                           std::vector<std::uint8_t> s,
                           std::optional<std::vector<double>> tau_true)
    : x_(std::move(x)),
      z_(std::move(z)),
      y_(std::move(y)),
      s_(std::move(s)),
      tau_true_(std::move(tau_true)) {}

StudyDataset StudyDataset::subset(std::span<const std::size_t> rows) const {
  Matrix x(rows.size(), x_.cols());
  std::vector<std::uint8_t> z(rows.size());
  std::vector<double> y(rows.size());
  std::vector<std::uint8_t> s(rows.size());
  std::optional<std::vector<double>> tau;
  if (tau_true_) tau.emplace(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    std::ranges::copy(x_.row(r), x.row(i).begin());
    z[i] = z_[r];
    y[i] = y_[r];
    s[i] = s_[r];
    if (tau) (*tau)[i] = (*tau_true_)[r];
  }
  return {std::move(x), std::move(z), std::move(y), std::move(s), std::move(tau)};
}

StudyDataset concat(const StudyDataset& a, const StudyDataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.num_covariates() != b.num_covariates()) {
    throw std::invalid_argument("concat: covariate dimensions differ (" +
                                std::to_string(a.num_covariates()) + " vs " +
                                std::to_string(b.num_covariates()) + ")");
  }
  std::vector<double> xv = a.x().values();
  xv.insert(xv.end(), b.x().values().begin(), b.x().values().end());
  auto join = [](auto lhs, const auto& rhs) {
    lhs.insert(lhs.end(), rhs.begin(), rhs.end());
    return lhs;
  };
  std::optional<std::vector<double>> tau;
  if (a.tau_true() && b.tau_true()) tau = join(*a.tau_true(), *b.tau_true());
  return {Matrix(a.size() + b.size(), a.num_covariates(), std::move(xv)), join(a.z(), b.z()),
          join(a.y(), b.y()), join(a.s(), b.s()), std::move(tau)};
}

ObservationWeights::ObservationWeights(std::vector<double> w) : w_(std::move(w)) {
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (!(w_[i] >= 0.0 && w_[i] <= 1.0)) {
      throw std::invalid_argument("ObservationWeights: entry " + std::to_string(i) +
                                  " outside [0, 1]");
    }
  }
}

ObservationWeights ObservationWeights::uniform(std::size_t n, double value) {
  return ObservationWeights(std::vector<double>(n, value));
}

std::vector<Diagnostic> validate(const StudyDataset& data) {
  using Kind = Diagnostic::Kind;
  std::vector<Diagnostic> out;
  const std::size_t n = data.y().size();
  if (n == 0) out.push_back({Kind::Empty, "dataset has no rows"});
  if (data.num_covariates() == 0 && n > 0) {
    out.push_back({Kind::LengthMismatch, "dataset has no covariate columns"});
  }
  auto check_len = [&](std::size_t len, const char* what) {
    if (len != n) {
      out.push_back({Kind::LengthMismatch, std::string(what) + " has length " +
                                               std::to_string(len) + ", expected " +
                                               std::to_string(n)});
      return false;
    }
    return true;
  };
  const bool x_ok = check_len(data.x().rows(), "covariate matrix");
  const bool z_ok = check_len(data.z().size(), "z");
  const bool s_ok = check_len(data.s().size(), "s");
  const bool tau_ok = !data.tau_true() || check_len(data.tau_true()->size(), "tau_true");
  if (!(x_ok && z_ok && s_ok && tau_ok)) return out;

  for (std::size_t i = 0; i < n; ++i) {
    if (data.z()[i] > 1) {
      out.push_back({Kind::NonBinaryTreatment, "non-binary treatment at row " + std::to_string(i)});
    }
    if (data.s()[i] > 1) {
      out.push_back({Kind::NonBinaryStudy, "non-binary study label at row " + std::to_string(i)});
    }
    if (!std::isfinite(data.y()[i])) {
      out.push_back({Kind::NonFiniteOutcome, "non-finite outcome at row " + std::to_string(i)});
    }
    if (data.tau_true() && !std::isfinite((*data.tau_true())[i])) {
      out.push_back({Kind::NonFiniteTau, "non-finite tau_true at row " + std::to_string(i)});
    }
    for (std::size_t c = 0; c < data.num_covariates(); ++c) {
      if (!std::isfinite(data.x()(i, c))) {
        out.push_back({Kind::NonFiniteCovariate, "non-finite covariate x" + std::to_string(c + 1) +
                                                     " at row " + std::to_string(i)});
      }
    }
  }

  // Positivity per study label.
  std::map<std::uint8_t, std::pair<std::size_t, std::size_t>> arms;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.s()[i] > 1 || data.z()[i] > 1) continue;
    auto& [treated, control] = arms[data.s()[i]];
    (data.z()[i] == 1 ? treated : control)++;
  }
  for (const auto& [label, counts] : arms) {
    const std::string where = arms.size() > 1 ? " in study " + std::to_string(label) : "";
    if (counts.first == 0) out.push_back({Kind::NoTreated, "no treated observations" + where});
    if (counts.second == 0) out.push_back({Kind::NoControl, "no control observations" + where});
  }
  return out;
}

void require_valid(const StudyDataset& data, std::string_view context) {
  auto diagnostics = validate(data);
  if (diagnostics.empty()) return;
  std::string message(context);
  message += ": invalid dataset:";
  for (const auto& d : diagnostics) message += " " + d.message + ";";
  throw std::invalid_argument(message);
}

TrainTestSplit split_train_test(const StudyDataset& data, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("split_train_test: train_fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * n));
  if (n_train == 0 || n_train == n) {
    throw std::invalid_argument("split_train_test: degenerate split (" + std::to_string(n_train) +
                                " of " + std::to_string(n) + " rows in train)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(spec.seed, {0x5e1171});
  order = sample_without_replacement(std::move(order), n, rng);

  TrainTestSplit out;
  out.train_rows.assign(order.begin(), order.begin() + n_train);
  out.test_rows.assign(order.begin() + n_train, order.end());
  std::ranges::sort(out.train_rows);
  std::ranges::sort(out.test_rows);
  out.train = data.subset(out.train_rows);
  out.test = data.subset(out.test_rows);
  return out;
}

namespace {

void write_number(std::ostream& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.write(buf, end - buf);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

void write_csv(const StudyDataset& data, std::ostream& out) {
  const std::size_t p = data.num_covariates();
  for (std::size_t c = 0; c < p; ++c) out << 'x' << (c + 1) << ',';
  out << "z,y,s";
  if (data.tau_true()) out << ",tau_true";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < p; ++c) {
      write_number(out, data.x()(i, c));
      out << ',';
    }
    out << static_cast<int>(data.z()[i]) << ',';
    write_number(out, data.y()[i]);
    out << ',' << static_cast<int>(data.s()[i]);
    if (data.tau_true()) {
      out << ',';
      write_number(out, (*data.tau_true())[i]);
    }
    out << '\n';
  }
}

void write_csv(const StudyDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(data, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

StudyDataset read_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(source_name + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_fields(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[trim(header[i])] = i;

  std::size_t p = 0;
  while (column.contains("x" + std::to_string(p + 1))) ++p;
  if (p == 0) throw std::runtime_error(source_name + ": missing column x1");
  for (const char* name : {"z", "y", "s"}) {
    if (!column.contains(name)) {
      throw std::runtime_error(source_name + ": missing column " + std::string(name));
    }
  }
  const bool has_tau = column.contains("tau_true");

  std::vector<double> xv;
  std::vector<std::uint8_t> z, s;
  std::vector<double> y, tau;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto fields = split_fields(line);
    auto number = [&](const std::string& name) {
      const std::size_t idx = column.at(name);
      if (idx >= fields.size()) {
        throw std::runtime_error(source_name + ": row " + std::to_string(row) + ", column " +
                                 name + ": missing value");
      }
      const std::string cell = trim(fields[idx]);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        // from_chars rejects "nan"/"inf" spellings on some inputs; accept them
        // explicitly so that validate() can report them.
        if (cell == "nan" || cell == "NaN" || cell == "NA") return std::nan("");
        if (cell == "inf" || cell == "Inf") return HUGE_VAL;
        if (cell == "-inf" || cell == "-Inf") return -HUGE_VAL;
        throw std::runtime_error(source_name + ": row " + std::to_string(row) + ", column " +
                                 name + ": cannot parse '" + cell + "'");
      }
      return value;
    };
    auto label = [&](const std::string& name) {
      const double v = number(name);
      if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
        throw std::runtime_error(source_name + ": row " + std::to_string(row) + ", column " +
                                 name + ": expected a small non-negative integer");
      }
      return static_cast<std::uint8_t>(v);
    };
    for (std::size_t c = 0; c < p; ++c) xv.push_back(number("x" + std::to_string(c + 1)));
    z.push_back(label("z"));
    y.push_back(number("y"));
    s.push_back(label("s"));
    if (has_tau) tau.push_back(number("tau_true"));
  }
  std::optional<std::vector<double>> tau_opt;
  if (has_tau) tau_opt = std::move(tau);
  return {Matrix(row, p, std::move(xv)), std::move(z), std::move(y), std::move(s),
          std::move(tau_opt)};
}

StudyDataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in, path.string());
}

}  // namespace mcf
