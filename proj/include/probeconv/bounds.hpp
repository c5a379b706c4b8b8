#pragma once

#include <vector>

#include "probeconv/matrix.hpp"
#include "probeconv/probing.hpp"
#include "probeconv/rng.hpp"

namespace probeconv {

/// Spectral and Frobenius norms of a dense matrix; the inputs of every
/// deviation bound. 0 <= spectral <= frobenius <= sqrt(dim) * spectral.
struct MatrixNorms {
  double spectral = 0.0;
  double frobenius = 0.0;
  int dim = 0;
};

/// Desk-scale guard for the SVD behind norms().
inline constexpr int kNormsDimLimit = 4096;

/// Exact norms via full SVD (spectral) and entry sums (Frobenius).
MatrixNorms norms(const Matrix& a);

/// Single-estimator deviation bound with fully explicit constants:
///   4 ||A||_2 / r * log(2/delta) + 2 ||A||_F / sqrt(r) * log^{1/2}(2/delta).
/// Holds with probability 1 - delta for Gaussian probes, any square A.
double prop1_bound(const MatrixNorms& n, int r, double delta);

struct EffectiveRank {
  double rho = 0.0;     // ||A||_F^2 / ||A||_2^2
  double r_star = 0.0;  // (4 / rho) * log(2/delta): decay-regime crossover
};

EffectiveRank effective_rank(const MatrixNorms& n, double delta);

enum class BoundRegime { small_r, large_r };

struct BoundReport {
  double bound_value = 0.0;
  double delta = 0.0;
  int r = 0;
  BoundRegime regime = BoundRegime::large_r;  // which term dominates
  double effective_rank = 0.0;                // of the target block
  double phase_transition_r = 0.0;
  double failure_prob_extra = 0.0;  // 2 C_in exp(-r p^2 / 2), p = min_n p_n
  double succinct_bound = 0.0;      // large-r-only form (second term alone)
};

/// Multi-channel deviation bound for block-trace entry (m, n), evaluated from
/// the per-block norm grid (c_out rows, c_in columns), the block sparsity, and
/// the caller-supplied absolute constant c:
///   c * ( sum_k ||A^{m,k}||_2 / (p_n r) * log(C_out C_in / delta)
///       + [ ||A^{m,n}||_F / sqrt(p_n)
///           + sum_{k != n} sqrt(p_k / p_n) ||A^{m,k}||_F ]
///         / sqrt(r) * log^{1/2}(C_out C_in / delta) ).
BoundReport thm2_bound(const std::vector<std::vector<MatrixNorms>>& block_norms,
                       const BlockSparsity& sp, int m, int n, int r,
                       double delta, double c);

/// Bilinear-form bound evaluators (cross-term building blocks, c fitted):
/// |(1/r) sum z_j^T A x_j| <= c (||A||_2/r log(2/d) + ||A||_F/sqrt(r) log^{1/2}(2/d)).
double lemma2_bound(const MatrixNorms& n, int r, double delta, double c);
/// Same with the right probe zeroed w.p. 1-p; Frobenius term gains sqrt(p).
double lemma3_bound(const MatrixNorms& n, double p, int r, double delta, double c);

struct CoverageResult {
  int trials = 0;
  int failures = 0;
  double failure_rate = 0.0;
};

/// Empirical coverage of the single-estimator bound: fraction of trials whose
/// |estimate - trace| exceeds prop1_bound. Must come in at or under delta
/// (plus binomial noise) since the constants are explicit.
CoverageResult coverage_prop1(const Matrix& a, double delta, int r, int trials,
                              ProbeSeed seed, int threads = 1);

/// Coverage of the multi-channel bound with constant c on a stacked matrix of
/// c_blocks x c_blocks blocks of size n: a trial fails if any (m, n) entry
/// deviates beyond its bound.
CoverageResult coverage_thm2(const Matrix& stacked, int n_block, int c_blocks,
                             const BlockSparsity& sp, double delta, int r,
                             int trials, double c, ProbeSeed seed,
                             int threads = 1);

/// Smallest constant from a multiplicative grid c in (0, c_max] for which
/// coverage_thm2 stays within delta + 3 SE. Returns 0 if none qualifies.
double fit_thm2_constant(const Matrix& stacked, int n_block, int c_blocks,
                         const BlockSparsity& sp, double delta, int r,
                         int trials, ProbeSeed seed, double c_max = 10.0,
                         int threads = 1);

}  // namespace probeconv
