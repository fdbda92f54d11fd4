#pragma once

#include "error.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mcels {

  /// Dense row-major grid indexed [t, d]: rows are time steps, columns are dimensions
  /// (or channels, for hidden activations).
  class Matrix {
  public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
      if (values_.size() != rows_ * cols_) {
        throw DataError("matrix value count " + std::to_string(values_.size()) + " does not match shape "
                        + std::to_string(rows_) + "x" + std::to_string(cols_));
      }
    }

    /// Build from nested rows; every row must have the same width.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
      const std::size_t r = rows.size();
      const std::size_t c = r == 0 ? 0 : rows.front().size();
      std::vector<double> flat;
      flat.reserve(r * c);
      for (const auto& row: rows) {
        if (row.size() != c) { throw DataError("ragged rows"); }
        flat.insert(flat.end(), row.begin(), row.end());
      }
      return Matrix(r, c, std::move(flat));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    /// Time-series reading of the shape.
    std::size_t length() const noexcept { return rows_; }
    std::size_t dims() const noexcept { return cols_; }

    double& operator()(std::size_t t, std::size_t d) noexcept { return values_[t * cols_ + d]; }
    double operator()(std::size_t t, std::size_t d) const noexcept { return values_[t * cols_ + d]; }

    double* row(std::size_t t) noexcept { return values_.data() + t * cols_; }
    const double* row(std::size_t t) const noexcept { return values_.data() + t * cols_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_shape(const Matrix& other) const noexcept { return rows_ == other.rows_ && cols_ == other.cols_; }

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
  };

  /// A multivariate time series: T time steps by D dimensions.
  using Series = Matrix;

  inline std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
  }

  inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
      throw DataError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
    }
  }

  /// Checks the observation-grid invariants: T >= 2, D >= 1, all values finite.
  inline void validate_series(const Series& x) {
    if (x.length() < 2) { throw DataError("series must have at least 2 time steps, got " + std::to_string(x.length())); }
    if (x.dims() < 1) { throw DataError("series must have at least 1 dimension"); }
    for (double v: x.values()) {
      if (!std::isfinite(v)) { throw DataError("series contains a non-finite value"); }
    }
  }

  /// Index of the largest element; ties go to the lowest index.
  inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[best]) { best = i; }
    }
    return best;
  }

  struct Dataset {
    std::string name;
    std::vector<Series> instances;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    /// Optional human-readable class names, indexed by class.
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return instances.size(); }
    bool empty() const noexcept { return instances.empty(); }
    std::size_t length() const noexcept { return instances.empty() ? 0 : instances.front().length(); }
    std::size_t dims() const noexcept { return instances.empty() ? 0 : instances.front().dims(); }

    void validate() const {
      if (num_classes < 2) { throw DataError("dataset needs at least 2 classes, got " + std::to_string(num_classes)); }
      if (labels.size() != instances.size()) { throw DataError("label count does not match instance count"); }
      for (std::size_t i = 0; i < instances.size(); ++i) {
        validate_series(instances[i]);
        if (!instances[i].same_shape(instances.front())) {
          throw DataError("instance " + std::to_string(i) + " has shape " + shape_string(instances[i])
                          + ", expected " + shape_string(instances.front()));
        }
        if (labels[i] >= num_classes) {
          throw DataError("instance " + std::to_string(i) + " label " + std::to_string(labels[i]) + " out of range");
        }
      }
    }
  };

} // namespace mcels
