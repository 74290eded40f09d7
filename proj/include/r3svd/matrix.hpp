#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace r3svd {

/// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range algorithm parameter.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense real matrix stored row-major.
///
/// Zero-sized matrices are allowed so that empty factor blocks (rank 0,
/// an empty basis) can be represented without special cases.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> values);

  /// Copy of the listed columns, in the given order.
  Matrix select_columns(std::span<const std::size_t> indices) const;
  /// First `count` columns.
  Matrix leading_columns(std::size_t count) const;
  Matrix transposed() const;

  /// Horizontal concatenation [*this, other]; an empty (0-column) side is allowed.
  Matrix hcat(const Matrix& other) const;

  bool all_finite() const noexcept;
  double max_abs() const noexcept;

  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// Truncated SVD factors U·diag(sigma)·Vᵀ.
struct LowRankFactors {
  Matrix u;                   // m × k
  std::vector<double> sigma;  // length k
  Matrix v;                   // n × k

  std::size_t rank() const noexcept { return sigma.size(); }

  /// U·diag(sigma)·Vᵀ as a dense m × n matrix.
  Matrix reconstruct() const;

  /// Reorders triplets by non-increasing sigma (stable).
  void sort_descending();
};

}  // namespace r3svd
