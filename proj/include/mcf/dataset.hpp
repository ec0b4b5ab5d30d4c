#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mcf {

/// Dense row-major matrix of covariates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  const std::vector<double>& values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Study membership label. Primary = 0, Auxiliary = 1.
enum class Study : std::uint8_t { Primary = 0, Auxiliary = 1 };

/// One study's (or a pooled set of studies') observations.
///
/// Values are immutable after construction; every transformation builds a new
/// dataset. Construction checks only shape consistency, the remaining
/// invariants are reported by validate() so that callers can inspect a loaded
/// file before deciding what is fatal.
class StudyDataset {
 public:
  StudyDataset() = default;
  StudyDataset(Matrix x, std::vector<std::uint8_t> z, std::vector<double> y,
               std::vector<std::uint8_t> s,
               std::optional<std::vector<double>> tau_true = std::nullopt);

  std::size_t size() const { return y_.size(); }
  std::size_t num_covariates() const { return x_.cols(); }

  const Matrix& x() const { return x_; }
  const std::vector<std::uint8_t>& z() const { return z_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<std::uint8_t>& s() const { return s_; }
  const std::optional<std::vector<double>>& tau_true() const { return tau_true_; }
  bool has_tau_true() const { return tau_true_.has_value(); }

  /// Rows in the given order (indices may repeat).
  StudyDataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const StudyDataset&, const StudyDataset&) = default;

 private:
  Matrix x_;
  std::vector<std::uint8_t> z_;
  std::vector<double> y_;
  std::vector<std::uint8_t> s_;
  std::optional<std::vector<double>> tau_true_;
};

/// Rows of `a` followed by rows of `b`. Covariate counts must match; tau_true is
/// kept only when both sides carry it.
StudyDataset concat(const StudyDataset& a, const StudyDataset& b);

/// Per-observation weights, each in [0, 1].
class ObservationWeights {
 public:
  ObservationWeights() = default;
  explicit ObservationWeights(std::vector<double> w);
  static ObservationWeights uniform(std::size_t n, double value = 1.0);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const { return w_; }
  std::span<const double> span() const { return w_; }

  friend bool operator==(const ObservationWeights&, const ObservationWeights&) = default;

 private:
  std::vector<double> w_;
};

struct Diagnostic {
  enum class Kind {
    Empty,
    LengthMismatch,
    NonBinaryTreatment,
    NonBinaryStudy,
    NonFiniteCovariate,
    NonFiniteOutcome,
    NonFiniteTau,
    NoTreated,
    NoControl,
  };
  Kind kind;
  std::string message;
};

/// Checks every dataset invariant. Positivity (both arms present) is checked
/// separately for each study label that occurs. Never throws.
std::vector<Diagnostic> validate(const StudyDataset& data);

/// Throws std::invalid_argument listing all diagnostics when validate() is not
/// clean.
void require_valid(const StudyDataset& data, std::string_view context);

struct SplitSpec {
  double train_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct TrainTestSplit {
  StudyDataset train;
  StudyDataset test;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Uniform random partition without replacement. The train side receives
/// floor(fraction * n) rows; both sides keep the original row order.
TrainTestSplit split_train_test(const StudyDataset& data, const SplitSpec& spec);

/// Columns x1..xp, z, y, s and optionally tau_true; values are written with 17
/// significant digits.
void write_csv(const StudyDataset& data, const std::filesystem::path& path);
void write_csv(const StudyDataset& data, std::ostream& out);

/// Columns may appear in any order. Throws std::runtime_error naming the missing
/// column or the offending row/column for unparseable cells.
StudyDataset read_csv(const std::filesystem::path& path);
StudyDataset read_csv(std::istream& in, const std::string& source_name = "<stream>");

}  // namespace mcf
