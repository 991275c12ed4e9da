#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace debthmm {

using Distribution = std::vector<double>;

/// Small dense row-major matrix. The model only ever needs a handful of
/// rows and columns, so this stays deliberately minimal.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> values() const noexcept { return data_; }

  double sum() const noexcept {
    double total = 0.0;
    for (double v : data_) total += v;
    return total;
  }

  Matrix& operator*=(double k) noexcept {
    for (double& v : data_) v *= k;
    return *this;
  }
  Matrix& operator/=(double k) noexcept {
    for (double& v : data_) v /= k;
    return *this;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace debthmm
