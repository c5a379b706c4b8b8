#pragma once

#include <span>
#include <vector>

#include "probeconv/errors.hpp"
#include "probeconv/rng.hpp"

namespace probeconv {

/// Minimal row-major dense matrix. Used by test oracles, bound evaluation,
/// and the CLI matrix families; the estimators themselves are matrix-free.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw dimension_error("Matrix: negative dims");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[size_t(i) * cols_ + j]; }
  double operator()(int i, int j) const { return data_[size_t(i) * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(int i) { return {data_.data() + size_t(i) * cols_, size_t(cols_)}; }
  std::span<const double> row(int i) const {
    return {data_.data() + size_t(i) * cols_, size_t(cols_)};
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix random_gaussian(int rows, int cols, CounterRng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.data_) v = rng.normal();
    return m;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw dimension_error("matmul: inner dims differ");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  if (int(x.size()) != a.cols() || int(y.size()) != a.rows())
    throw dimension_error("matvec: size mismatch");
  for (int i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    const auto r = a.row(i);
    for (int j = 0; j < a.cols(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace probeconv
