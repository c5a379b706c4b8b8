#include "probeconv/bounds.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <thread>

#include "probeconv/linear_map.hpp"
#include "probeconv/trace.hpp"

namespace probeconv {

MatrixNorms norms(const Matrix& a) {
  if (a.rows() > kNormsDimLimit || a.cols() > kNormsDimLimit)
    throw capacity_error("norms: matrix exceeds desk-scale SVD limit");
  if (a.rows() == 0 || a.cols() == 0) throw dimension_error("norms: empty matrix");

  double frob2 = 0.0;
  for (double v : a.data()) frob2 += v * v;

  Eigen::MatrixXd m(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);

  MatrixNorms out;
  out.spectral = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  out.frobenius = std::sqrt(frob2);
  out.dim = std::max(a.rows(), a.cols());
  return out;
}

double prop1_bound(const MatrixNorms& n, int r, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("prop1_bound: delta must be in (0, 1)");
  if (r < 1) throw domain_error("prop1_bound: r must be >= 1");
  const double log_term = std::log(2.0 / delta);
  return 4.0 * n.spectral / double(r) * log_term +
         2.0 * n.frobenius / std::sqrt(double(r)) * std::sqrt(log_term);
}

EffectiveRank effective_rank(const MatrixNorms& n, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("effective_rank: delta must be in (0, 1)");
  if (!(n.spectral > 0.0))
    throw domain_error("effective_rank: zero matrix has no effective rank");
  EffectiveRank er;
  er.rho = (n.frobenius * n.frobenius) / (n.spectral * n.spectral);
  er.r_star = 4.0 / er.rho * std::log(2.0 / delta);
  return er;
}

BoundReport thm2_bound(const std::vector<std::vector<MatrixNorms>>& block_norms,
                       const BlockSparsity& sp, int m, int n, int r,
                       double delta, double c) {
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("thm2_bound: delta must be in (0, 1)");
  if (r < 1) throw domain_error("thm2_bound: r must be >= 1");
  if (!(c > 0.0)) throw domain_error("thm2_bound: constant c must be positive");
  const int c_out = int(block_norms.size());
  if (c_out == 0 || m < 0 || m >= c_out)
    throw dimension_error("thm2_bound: output block index");
  const int c_in = int(block_norms[0].size());
  if (n < 0 || n >= c_in) throw dimension_error("thm2_bound: input block index");
  sp.validate(c_in);

  const double log_term = std::log(double(c_out) * double(c_in) / delta);
  const double p_n = sp.probs[size_t(n)];

  double spectral_sum = 0.0;
  double frob_part = block_norms[size_t(m)][size_t(n)].frobenius / std::sqrt(p_n);
  for (int k = 0; k < c_in; ++k) {
    spectral_sum += block_norms[size_t(m)][size_t(k)].spectral;
    if (k != n)
      frob_part += std::sqrt(sp.probs[size_t(k)] / p_n) *
                   block_norms[size_t(m)][size_t(k)].frobenius;
  }

  const double small_term = spectral_sum / (p_n * double(r)) * log_term;
  const double large_term =
      frob_part / std::sqrt(double(r)) * std::sqrt(log_term);

  BoundReport rep;
  rep.bound_value = c * (small_term + large_term);
  rep.succinct_bound = c * large_term;  // valid in the large-r regime only
  rep.delta = delta;
  rep.r = r;
  rep.regime = small_term > large_term ? BoundRegime::small_r : BoundRegime::large_r;

  const MatrixNorms& target = block_norms[size_t(m)][size_t(n)];
  if (target.spectral > 0.0) {
    const EffectiveRank er = effective_rank(target, delta);
    rep.effective_rank = er.rho;
    rep.phase_transition_r = er.r_star;
  }
  const double p_min = sp.min_prob();
  rep.failure_prob_extra =
      2.0 * double(c_in) * std::exp(-double(r) * p_min * p_min / 2.0);
  return rep;
}

double lemma2_bound(const MatrixNorms& n, int r, double delta, double c) {
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("lemma2_bound: delta must be in (0, 1)");
  if (r < 1) throw domain_error("lemma2_bound: r must be >= 1");
  const double log_term = std::log(2.0 / delta);
  return c * (n.spectral / double(r) * log_term +
              n.frobenius / std::sqrt(double(r)) * std::sqrt(log_term));
}

double lemma3_bound(const MatrixNorms& n, double p, int r, double delta,
                    double c) {
  if (!(p > 0.0 && p <= 1.0)) throw domain_error("lemma3_bound: p must be in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("lemma3_bound: delta must be in (0, 1)");
  if (r < 1) throw domain_error("lemma3_bound: r must be >= 1");
  const double log_term = std::log(2.0 / delta);
  return c * (n.spectral / double(r) * log_term +
              std::sqrt(p) * n.frobenius / std::sqrt(double(r)) *
                  std::sqrt(log_term));
}

namespace {

void run_indexed(int trials, int threads, const std::function<void(int)>& f) {
  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) f(t);
    return;
  }
  std::vector<std::thread> pool;
  const int nt = std::min(threads, trials);
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      for (int t = w; t < trials; t += nt) f(t);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

CoverageResult coverage_prop1(const Matrix& a, double delta, int r, int trials,
                              ProbeSeed seed, int threads) {
  if (trials < 1) throw domain_error("coverage_prop1: trials must be >= 1");
  const MatrixNorms nm = norms(a);
  const double bound = prop1_bound(nm, r, delta);
  const double tr = exact_trace(a);
  const LinearMap map = LinearMap::from_dense(a);

  std::vector<std::uint8_t> failed(size_t(trials), 0);
  run_indexed(trials, threads, [&](int t) {
    const TraceEstimate est = hutchinson(map, r, seed.child(std::uint64_t(t)));
    failed[size_t(t)] = std::abs(est.value - tr) > bound ? 1 : 0;
  });

  CoverageResult res;
  res.trials = trials;
  for (auto f : failed) res.failures += f;
  res.failure_rate = double(res.failures) / double(trials);
  return res;
}

namespace {

Matrix extract_block(const Matrix& stacked, int n_block, int m, int k) {
  Matrix b(n_block, n_block);
  for (int i = 0; i < n_block; ++i)
    for (int j = 0; j < n_block; ++j)
      b(i, j) = stacked(m * n_block + i, k * n_block + j);
  return b;
}

}  // namespace

CoverageResult coverage_thm2(const Matrix& stacked, int n_block, int c_blocks,
                             const BlockSparsity& sp, double delta, int r,
                             int trials, double c, ProbeSeed seed, int threads) {
  if (trials < 1) throw domain_error("coverage_thm2: trials must be >= 1");
  if (stacked.rows() != n_block * c_blocks || stacked.cols() != n_block * c_blocks)
    throw dimension_error("coverage_thm2: stacked matrix dims");

  std::vector<std::vector<MatrixNorms>> block_norms(static_cast<size_t>(c_blocks));
  Matrix exact(c_blocks, c_blocks);
  std::vector<std::vector<Matrix>> blocks(static_cast<size_t>(c_blocks));
  for (int m = 0; m < c_blocks; ++m) {
    block_norms[size_t(m)].resize(size_t(c_blocks));
    blocks[size_t(m)].resize(size_t(c_blocks));
    for (int k = 0; k < c_blocks; ++k) {
      Matrix blk = extract_block(stacked, n_block, m, k);
      block_norms[size_t(m)][size_t(k)] = norms(blk);
      exact(m, k) = exact_trace(blk);
      blocks[size_t(m)][size_t(k)] = std::move(blk);
    }
  }
  const BlockLinearMap map =
      BlockLinearMap::from_dense_blocks(std::move(blocks), n_block);

  Matrix bound(c_blocks, c_blocks);
  for (int m = 0; m < c_blocks; ++m)
    for (int n = 0; n < c_blocks; ++n)
      bound(m, n) = thm2_bound(block_norms, sp, m, n, r, delta, c).bound_value;

  std::vector<std::uint8_t> failed(size_t(trials), 0);
  run_indexed(trials, threads, [&](int t) {
    const ProbeSeed ts = seed.child(std::uint64_t(t));
    const ProbeMatrix z = gen_block_sparse(n_block, c_blocks, r, sp, ts);
    const TraceGrid grid = multichannel_ortho(map, z);
    bool any = false;
    for (int m = 0; m < c_blocks && !any; ++m)
      for (int n = 0; n < c_blocks && !any; ++n)
        any = std::abs(grid.at(m, n).value - exact(m, n)) > bound(m, n);
    failed[size_t(t)] = any ? 1 : 0;
  });

  CoverageResult res;
  res.trials = trials;
  for (auto f : failed) res.failures += f;
  res.failure_rate = double(res.failures) / double(trials);
  return res;
}

double fit_thm2_constant(const Matrix& stacked, int n_block, int c_blocks,
                         const BlockSparsity& sp, double delta, int r,
                         int trials, ProbeSeed seed, double c_max, int threads) {
  const double se = std::sqrt(delta * (1.0 - delta) / double(trials));
  const double target = delta + 3.0 * se;
  // Multiplicative sweep from small c upward; first qualifying value wins.
  for (double c = 0.125; c <= c_max * (1.0 + 1e-12); c *= std::sqrt(2.0)) {
    const CoverageResult res =
        coverage_thm2(stacked, n_block, c_blocks, sp, delta, r, trials, c, seed,
                      threads);
    if (res.failure_rate <= target) return c;
  }
  return 0.0;
}

}  // namespace probeconv
