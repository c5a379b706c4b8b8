#pragma once

#include <optional>
#include <string>

#include "probeconv/linear_map.hpp"
#include "probeconv/rng.hpp"
#include "probeconv/trace.hpp"

namespace probeconv {

/// A benchmark instance: a matrix-free stacked operator together with its
/// exact block traces and, when desk-scale, a dense rendering for norm and
/// bound evaluation.
struct BenchMatrix {
  std::string family;
  BlockLinearMap map;
  Matrix exact_traces;  // c_out x c_in
  std::optional<Matrix> dense;
};

/// identity: I_dim (effective rank = dim).
BenchMatrix bench_identity(int dim);

/// rank1: u u^T with Gaussian u scaled to ||u u^T||_F = sqrt(dim), the same
/// Frobenius norm as the identity (effective rank 1).
BenchMatrix bench_rank_one(int dim, std::uint64_t seed);

/// gaussian: dense i.i.d. N(0,1) entries.
BenchMatrix bench_gaussian(int dim, std::uint64_t seed);

/// block-crosstalk: c blocks of size n. Diagonal blocks are tiny multiples of
/// the identity; each block row m carries one strong interferer at column
/// (m+1) mod c, a scaled one-step circulant with Frobenius norm `off_frob`
/// and zero trace. Estimating any block trace is then dominated by crosstalk
/// from a single loud neighbour, the regime block-sparse probing is built
/// for. Matrix-free (apply is O(n) per block), with a dense rendering only
/// for small n*c.
BenchMatrix bench_block_crosstalk(int n, int c, double diag_scale = 0.01,
                                  double off_frob = 1.0);

/// Family dispatch by name: identity | rank1 | gaussian | block-crosstalk.
BenchMatrix make_bench_matrix(const std::string& family, int dim, int blocks,
                              std::uint64_t seed);

}  // namespace probeconv
