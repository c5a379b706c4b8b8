#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "probeconv/errors.hpp"
#include "probeconv/matrix.hpp"
#include "probeconv/rng.hpp"

namespace probeconv {

/// Per-input-channel probabilities p_n in (0, 1] of a probe block being
/// nonzero. probs.size() == c_in.
struct BlockSparsity {
  std::vector<double> probs;

  static BlockSparsity dense(int c_in) {
    return {std::vector<double>(size_t(c_in), 1.0)};
  }
  static BlockSparsity uniform(int c_in, double p) {
    return {std::vector<double>(size_t(c_in), p)};
  }
  /// Default policy: p_n = 1/c_in, one active block per probe column in
  /// expectation.
  static BlockSparsity default_for(int c_in) {
    return uniform(c_in, 1.0 / c_in);
  }

  void validate(int c_in) const {
    if (int(probs.size()) != c_in)
      throw dimension_error("BlockSparsity: probs length != c_in");
    for (double p : probs)
      if (!(p > 0.0 && p <= 1.0))
        throw domain_error("BlockSparsity: p_n must be in (0, 1]");
  }

  bool is_dense() const {
    for (double p : probs)
      if (p < 1.0) return false;
    return true;
  }

  double min_prob() const {
    double m = 1.0;
    for (double p : probs)
      if (p < m) m = p;
    return m;
  }

  friend bool operator==(const BlockSparsity&, const BlockSparsity&) = default;
};

// =============================================================================
/// r probing vectors of stacked length c_in * n, stored probe-major: column j
/// occupies values[j*(c_in*n) .. ), block (n_blk, j) is the n_blk-th length-n
/// slice of column j. A block is either all-zero (mask false) or i.i.d.
/// standard normal (mask true). Every block row has nnz >= 1 by construction.
///
/// The matrix is a pure function of (seed, dims, sparsity): regenerating with
/// the same arguments is bit-identical, on any thread, in any order.
class ProbeMatrix {
 public:
  ProbeMatrix(int n, int c_in, int r, ProbeSeed seed)
      : n_(n), c_in_(c_in), r_(r), seed_(seed),
        values_(size_t(n) * c_in * r, 0.0),
        mask_(size_t(c_in) * r, 0), nnz_(size_t(c_in), 0) {
    if (n <= 0 || c_in <= 0 || r <= 0)
      throw dimension_error("ProbeMatrix: n, c_in, r must be positive");
  }

  int block_size() const { return n_; }    // n
  int block_count() const { return c_in_; }  // c_in
  int probes() const { return r_; }          // r
  int stacked_dim() const { return n_ * c_in_; }
  const ProbeSeed& seed() const { return seed_; }
  unsigned attempt() const { return attempt_; }

  /// Stacked column j (length c_in * n).
  std::span<const double> probe(int j) const {
    return {values_.data() + size_t(j) * stacked_dim(), size_t(stacked_dim())};
  }
  std::span<double> probe(int j) {
    return {values_.data() + size_t(j) * stacked_dim(), size_t(stacked_dim())};
  }

  /// Block n_blk of column j (length n).
  std::span<const double> block(int n_blk, int j) const {
    return {values_.data() + size_t(j) * stacked_dim() + size_t(n_blk) * n_,
            size_t(n_)};
  }

  bool active(int n_blk, int j) const { return mask_[size_t(n_blk) * r_ + j] != 0; }
  int nnz(int n_blk) const { return nnz_[size_t(n_blk)]; }

  friend bool operator==(const ProbeMatrix& a, const ProbeMatrix& b) {
    return a.n_ == b.n_ && a.c_in_ == b.c_in_ && a.r_ == b.r_ &&
           a.values_ == b.values_ && a.mask_ == b.mask_;
  }

  /// Test hook: deterministic identity probe with r = n * c_in, Z = I.
  /// Compression with it is lossless; not a random probe.
  static ProbeMatrix identity(int n, int c_in);

 private:
  friend ProbeMatrix gen_block_sparse(int, int, int, const BlockSparsity&,
                                      ProbeSeed, int);

  int n_;
  int c_in_;
  int r_;
  ProbeSeed seed_;
  unsigned attempt_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;  // (c_in, r): mask_[n*r + j]
  std::vector<int> nnz_;
};

/// Dense Gaussian probes: every block active, entries N(0,1), deterministic
/// in (seed, dims). Identical to gen_block_sparse with all p_n = 1.
ProbeMatrix gen_gaussian(int n, int c_in, int r, ProbeSeed seed);

/// Block-sparse probes: block (n, j) is zeroed with probability 1 - p_n, else
/// Gaussian. If any block row comes out all-zero the whole matrix is redrawn
/// under an incremented attempt counter; after max_attempts redraws a
/// sparsity_error is thrown (per-row probability (1-p_n)^r per attempt).
ProbeMatrix gen_block_sparse(int n, int c_in, int r, const BlockSparsity& sp,
                             ProbeSeed seed, int max_attempts = 16);

/// Diagnostic Gram deviations: entry (a, b) is
///   || (1/nnz(a)) sum_j z_{a,j} z_{b,j}^T - [a==b] I_n ||_F.
/// Dense probes at large r drive every entry to zero; block-sparse probes
/// drive the off-diagonal entries down much faster at equal r.
Matrix block_gram(const ProbeMatrix& z);

}  // namespace probeconv
