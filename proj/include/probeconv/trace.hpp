#pragma once

#include <optional>
#include <vector>

#include "probeconv/linear_map.hpp"
#include "probeconv/probing.hpp"
#include "probeconv/rng.hpp"

namespace probeconv {

struct TraceEstimate {
  double value = 0.0;
  int r_used = 0;
  int nnz_used = 0;  // == r_used for dense probes
  ProbeSeed seed;
};

/// Diagonal sum of a dense square matrix.
double exact_trace(const Matrix& a);

/// Hutchinson estimator: (1/r) sum_j z_j^T A z_j with Gaussian probes.
/// Unbiased for any square A, symmetric or not.
TraceEstimate hutchinson(const LinearMap& a, int r, ProbeSeed seed);

/// c_out x c_in grid of per-block trace estimates.
class TraceGrid {
 public:
  TraceGrid() = default;
  TraceGrid(int c_out, int c_in)
      : c_out_(c_out), c_in_(c_in), cells_(size_t(c_out) * c_in) {}

  int c_out() const { return c_out_; }
  int c_in() const { return c_in_; }
  TraceEstimate& at(int m, int n) { return cells_[size_t(m) * c_in_ + n]; }
  const TraceEstimate& at(int m, int n) const { return cells_[size_t(m) * c_in_ + n]; }

 private:
  int c_out_ = 0;
  int c_in_ = 0;
  std::vector<TraceEstimate> cells_;
};

/// Simultaneous estimate of every block trace with one set of r dense
/// Gaussian stacked probes: G^{m,n} = (1/r) sum_j z_{n,j}^T (A z_j)_m.
/// Cross-block terms vanish in expectation; each entry is unbiased for
/// tr(A^{m,n}).
TraceGrid multichannel_naive(const BlockLinearMap& a, int r, ProbeSeed seed);

/// Same contraction with block-sparse probes and per-row normalization:
/// G~^{m,n} = (1/nnz(n)) sum_j z_{n,j}^T (A z_j)_m. Reduces to the dense
/// estimator when every p_n = 1 (bit-identically, same seed).
TraceGrid multichannel_ortho(const BlockLinearMap& a, const ProbeMatrix& z);

enum class Estimator { naive, ortho };

struct ErrorStatsRow {
  int r = 0;
  double mean_abs = 0.0;
  double median_abs = 0.0;
  double q95_abs = 0.0;
  double q99_abs = 0.0;
  double std_err = 0.0;
};

struct ErrorStats {
  std::vector<ErrorStatsRow> rows;
  /// Least-squares slope of log2(median |error|) against log2 r over the
  /// whole grid; -0.5 in the sqrt(r) regime.
  double slope = 0.0;
  /// Crossover of the fitted two-term decay a/r + b/sqrt(r) on the
  /// 99th-percentile error curve: the r where the fast regime hands over to
  /// the sqrt(r) regime. Grows as the effective rank shrinks.
  double transition_r = 0.0;
};

/// Empirical convergence harness: for each r in the grid runs `trials`
/// independently seeded estimates and records statistics of the per-trial
/// error (mean over blocks of |estimate - exact block trace|).
/// `sparsity` selects the probe distribution for the ortho estimator and is
/// ignored for the naive one.
ErrorStats estimator_error_stats(const BlockLinearMap& a,
                                 const Matrix& exact_block_traces,
                                 Estimator estimator,
                                 std::span<const int> r_grid, int trials,
                                 ProbeSeed seed,
                                 const BlockSparsity* sparsity = nullptr,
                                 int threads = 1);

}  // namespace probeconv
