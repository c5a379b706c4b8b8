#include "probeconv/matrices.hpp"

#include <cmath>

#include "probeconv/errors.hpp"

namespace probeconv {

BenchMatrix bench_identity(int dim) {
  BenchMatrix b;
  b.family = "identity";
  b.map = BlockLinearMap::from_linear_map(LinearMap::identity(dim));
  b.exact_traces = Matrix(1, 1);
  b.exact_traces(0, 0) = double(dim);
  b.dense = Matrix::identity(dim);
  return b;
}

BenchMatrix bench_rank_one(int dim, std::uint64_t seed) {
  CounterRng rng(seed, 0x72616e6bULL);
  std::vector<double> u(static_cast<size_t>(dim));
  double norm = 0.0;
  for (double& v : u) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  // ||u u^T||_F = ||u||^2 = sqrt(dim), matching the identity's Frobenius norm.
  const double target = std::sqrt(std::sqrt(double(dim)));
  for (double& v : u) v = v / norm * target;

  BenchMatrix b;
  b.family = "rank1";
  b.map = BlockLinearMap::from_linear_map(LinearMap::rank_one(u, u));
  b.exact_traces = Matrix(1, 1);
  double tr = 0.0;
  for (double v : u) tr += v * v;
  b.exact_traces(0, 0) = tr;
  Matrix dense(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) dense(i, j) = u[size_t(i)] * u[size_t(j)];
  b.dense = std::move(dense);
  return b;
}

BenchMatrix bench_gaussian(int dim, std::uint64_t seed) {
  CounterRng rng(seed, 0x67617573ULL);
  Matrix a = Matrix::random_gaussian(dim, dim, rng);
  BenchMatrix b;
  b.family = "gaussian";
  b.exact_traces = Matrix(1, 1);
  b.exact_traces(0, 0) = exact_trace(a);
  b.map = BlockLinearMap::from_linear_map(LinearMap::from_dense(a));
  b.dense = std::move(a);
  return b;
}

BenchMatrix bench_block_crosstalk(int n, int c, double diag_scale,
                                  double off_frob) {
  if (n < 1 || c < 2)
    throw dimension_error("bench_block_crosstalk: need n >= 1 and c >= 2");
  const double diag = diag_scale * off_frob / std::sqrt(double(n));
  const double shift_scale = off_frob / std::sqrt(double(n));

  BenchMatrix b;
  b.family = "block-crosstalk";
  b.map.n = n;
  b.map.c_in = c;
  b.map.c_out = c;
  b.map.apply = [n, c, diag, shift_scale](std::span<const double> x,
                                          std::span<double> y) {
    for (int m = 0; m < c; ++m) {
      const double* self = x.data() + size_t(m) * n;
      const double* next = x.data() + size_t((m + 1) % c) * n;
      double* out = y.data() + size_t(m) * n;
      // diag block: diag * I; interferer: shift_scale * one-step circulant.
      for (int i = 0; i < n; ++i)
        out[i] = diag * self[i] + shift_scale * next[(i + 1) % n];
    }
  };

  b.exact_traces = Matrix(c, c);
  for (int m = 0; m < c; ++m) b.exact_traces(m, m) = diag * double(n);
  // Circulant interferers have zero diagonal (n >= 2), zero trace.
  if (n == 1)
    for (int m = 0; m < c; ++m) b.exact_traces(m, (m + 1) % c) = shift_scale;

  if (n * c <= 1024) {
    Matrix dense(n * c, n * c);
    for (int m = 0; m < c; ++m) {
      const int tgt = (m + 1) % c;
      for (int i = 0; i < n; ++i) {
        dense(m * n + i, m * n + i) = diag;
        dense(m * n + i, tgt * n + (i + 1) % n) = shift_scale;
      }
    }
    b.dense = std::move(dense);
  }
  return b;
}

BenchMatrix make_bench_matrix(const std::string& family, int dim, int blocks,
                              std::uint64_t seed) {
  if (family == "identity") return bench_identity(dim);
  if (family == "rank1") return bench_rank_one(dim, seed);
  if (family == "gaussian") return bench_gaussian(dim, seed);
  if (family == "block-crosstalk") return bench_block_crosstalk(dim, blocks);
  throw domain_error("unknown matrix family: " + family);
}

}  // namespace probeconv
