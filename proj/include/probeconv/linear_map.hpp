#pragma once

#include <functional>
#include <memory>
#include <span>

#include "probeconv/errors.hpp"
#include "probeconv/matrix.hpp"

namespace probeconv {

/// Matrix-free square operator: all the estimators need is the action v -> Av
/// (and v -> A^T v for adjoint checks).
struct LinearMap {
  int dim = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  std::function<void(std::span<const double>, std::span<double>)> apply_adjoint;

  static LinearMap from_dense(Matrix a) {
    if (a.rows() != a.cols()) throw dimension_error("LinearMap: matrix not square");
    auto m = std::make_shared<Matrix>(std::move(a));
    auto mt = std::make_shared<Matrix>(transpose(*m));
    return {m->rows(),
            [m](std::span<const double> x, std::span<double> y) { matvec(*m, x, y); },
            [mt](std::span<const double> x, std::span<double> y) { matvec(*mt, x, y); }};
  }

  static LinearMap identity(int n) {
    auto copy = [](std::span<const double> x, std::span<double> y) {
      std::copy(x.begin(), x.end(), y.begin());
    };
    return {n, copy, copy};
  }

  static LinearMap zero(int n) {
    auto z = [](std::span<const double>, std::span<double> y) {
      std::fill(y.begin(), y.end(), 0.0);
    };
    return {n, z, z};
  }

  /// rank-1 map u v^T.
  static LinearMap rank_one(std::vector<double> u, std::vector<double> v) {
    if (u.size() != v.size()) throw dimension_error("rank_one: length mismatch");
    auto us = std::make_shared<std::vector<double>>(std::move(u));
    auto vs = std::make_shared<std::vector<double>>(std::move(v));
    auto mk = [](std::shared_ptr<std::vector<double>> a,
                 std::shared_ptr<std::vector<double>> b) {
      return [a, b](std::span<const double> x, std::span<double> y) {
        double dot = 0.0;
        for (size_t i = 0; i < b->size(); ++i) dot += (*b)[i] * x[i];
        for (size_t i = 0; i < a->size(); ++i) y[i] = (*a)[i] * dot;
      };
    };
    return {int(us->size()), mk(us, vs), mk(vs, us)};
  }

  static LinearMap scaled(LinearMap inner, double c) {
    auto wrap = [c](auto f) {
      return [f, c](std::span<const double> x, std::span<double> y) {
        f(x, y);
        for (double& v : y) v *= c;
      };
    };
    return {inner.dim, wrap(inner.apply), wrap(inner.apply_adjoint)};
  }
};

/// Stacked block operator: C_out x C_in grid of n x n blocks accessed only
/// through v in R^{n*c_in} -> A v in R^{n*c_out}. Block (m, k) of the result
/// row m is A^{m,k} v_k summed over k.
struct BlockLinearMap {
  int n = 0;
  int c_in = 0;
  int c_out = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;

  int in_dim() const { return n * c_in; }
  int out_dim() const { return n * c_out; }

  static BlockLinearMap from_linear_map(const LinearMap& a) {
    return {a.dim, 1, 1, a.apply};
  }

  /// Dense grid of blocks; blocks[m][k] is n x n (empty Matrix = zero block).
  static BlockLinearMap from_dense_blocks(
      std::vector<std::vector<Matrix>> blocks, int n);
};

inline BlockLinearMap BlockLinearMap::from_dense_blocks(
    std::vector<std::vector<Matrix>> blocks, int n) {
  const int c_out = int(blocks.size());
  if (c_out == 0) throw dimension_error("from_dense_blocks: empty grid");
  const int c_in = int(blocks[0].size());
  for (const auto& row : blocks) {
    if (int(row.size()) != c_in)
      throw dimension_error("from_dense_blocks: ragged grid");
    for (const auto& blk : row)
      if (blk.rows() != 0 && (blk.rows() != n || blk.cols() != n))
        throw dimension_error("from_dense_blocks: block is not n x n");
  }
  auto g = std::make_shared<std::vector<std::vector<Matrix>>>(std::move(blocks));
  auto apply = [g, n, c_in, c_out](std::span<const double> x, std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    std::vector<double> tmp(static_cast<size_t>(n));
    for (int m = 0; m < c_out; ++m) {
      for (int k = 0; k < c_in; ++k) {
        const Matrix& blk = (*g)[size_t(m)][size_t(k)];
        if (blk.rows() == 0) continue;
        matvec(blk, x.subspan(size_t(k) * n, size_t(n)), tmp);
        double* out = y.data() + size_t(m) * n;
        for (int t = 0; t < n; ++t) out[t] += tmp[size_t(t)];
      }
    }
  };
  return {n, c_in, c_out, apply};
}

}  // namespace probeconv
