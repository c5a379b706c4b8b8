#include "probeconv/trace.hpp"

#include <cmath>
#include <thread>

#include "probeconv/stats.hpp"

namespace probeconv {

double exact_trace(const Matrix& a) {
  if (a.rows() != a.cols()) throw dimension_error("exact_trace: matrix not square");
  double t = 0.0;
  for (int i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

namespace {

// Shared contraction: accumulates sum_j z_{n,j}^T (A z_j)_m per (m, n), then
// scales rows by 1/r (dense) or 1/nnz(n) (block-sparse). Keeping one code
// path makes the p_n = 1 reduction bit-exact by construction.
TraceGrid accumulate_block_estimates(const BlockLinearMap& a,
                                     const ProbeMatrix& z, bool dense_scaling) {
  if (z.block_size() != a.n || z.block_count() != a.c_in)
    throw dimension_error("multichannel estimate: probe dims do not match map");
  TraceGrid grid(a.c_out, a.c_in);
  std::vector<double> az(static_cast<size_t>(a.out_dim()));

  for (int j = 0; j < z.probes(); ++j) {
    a.apply(z.probe(j), az);
    for (int n = 0; n < a.c_in; ++n) {
      if (!z.active(n, j)) continue;
      const auto zn = z.block(n, j);
      for (int m = 0; m < a.c_out; ++m) {
        const double* out_m = az.data() + size_t(m) * a.n;
        double dot = 0.0;
        for (int t = 0; t < a.n; ++t) dot += zn[size_t(t)] * out_m[t];
        grid.at(m, n).value += dot;
      }
    }
  }

  for (int n = 0; n < a.c_in; ++n) {
    const int nnz = z.nnz(n);
    const double scale = dense_scaling ? 1.0 / z.probes() : 1.0 / nnz;
    for (int m = 0; m < a.c_out; ++m) {
      TraceEstimate& e = grid.at(m, n);
      e.value *= scale;
      e.r_used = z.probes();
      e.nnz_used = nnz;
      e.seed = z.seed();
    }
  }
  return grid;
}

}  // namespace

TraceEstimate hutchinson(const LinearMap& a, int r, ProbeSeed seed) {
  if (r < 1) throw domain_error("hutchinson: r must be >= 1");
  const ProbeMatrix z = gen_gaussian(a.dim, 1, r, seed);
  const BlockLinearMap block = BlockLinearMap::from_linear_map(a);
  return accumulate_block_estimates(block, z, /*dense_scaling=*/true).at(0, 0);
}

TraceGrid multichannel_naive(const BlockLinearMap& a, int r, ProbeSeed seed) {
  if (r < 1) throw domain_error("multichannel_naive: r must be >= 1");
  const ProbeMatrix z = gen_gaussian(a.n, a.c_in, r, seed);
  return accumulate_block_estimates(a, z, /*dense_scaling=*/true);
}

TraceGrid multichannel_ortho(const BlockLinearMap& a, const ProbeMatrix& z) {
  return accumulate_block_estimates(a, z, /*dense_scaling=*/false);
}

ErrorStats estimator_error_stats(const BlockLinearMap& a,
                                 const Matrix& exact_block_traces,
                                 Estimator estimator,
                                 std::span<const int> r_grid, int trials,
                                 ProbeSeed seed, const BlockSparsity* sparsity,
                                 int threads) {
  if (trials < 1) throw domain_error("estimator_error_stats: trials must be >= 1");
  if (exact_block_traces.rows() != a.c_out || exact_block_traces.cols() != a.c_in)
    throw dimension_error("estimator_error_stats: exact trace grid dims");
  const BlockSparsity sp = sparsity ? *sparsity : BlockSparsity::default_for(a.c_in);

  ErrorStats stats;
  std::vector<double> log_r, log_med;

  for (size_t gi = 0; gi < r_grid.size(); ++gi) {
    const int r = r_grid[gi];
    std::vector<double> errs(static_cast<size_t>(trials));
    auto run_trial = [&](int t) {
      const ProbeSeed trial_seed = seed.child(std::uint64_t(gi), std::uint64_t(t));
      TraceGrid grid;
      if (estimator == Estimator::naive) {
        grid = multichannel_naive(a, r, trial_seed);
      } else {
        const ProbeMatrix z = gen_block_sparse(a.n, a.c_in, r, sp, trial_seed);
        grid = multichannel_ortho(a, z);
      }
      double err = 0.0;
      for (int m = 0; m < a.c_out; ++m)
        for (int n = 0; n < a.c_in; ++n)
          err += std::abs(grid.at(m, n).value - exact_block_traces(m, n));
      errs[size_t(t)] = err / double(a.c_out * a.c_in);
    };
    if (threads <= 1) {
      for (int t = 0; t < trials; ++t) run_trial(t);
    } else {
      // Trials are independent and indexed; per-slot writes keep the result
      // identical for any thread count.
      std::vector<std::thread> pool;
      const int nt = std::min(threads, trials);
      for (int w = 0; w < nt; ++w)
        pool.emplace_back([&, w] {
          for (int t = w; t < trials; t += nt) run_trial(t);
        });
      for (auto& th : pool) th.join();
    }

    ErrorStatsRow row;
    row.r = r;
    row.mean_abs = mean(errs);
    row.median_abs = median(errs);
    row.q95_abs = quantile(errs, 0.95);
    row.q99_abs = quantile(errs, 0.99);
    row.std_err = stddev(errs);
    stats.rows.push_back(row);
    log_r.push_back(std::log2(double(r)));
    log_med.push_back(std::log2(std::max(row.median_abs, 1e-300)));
  }

  if (stats.rows.size() >= 2) stats.slope = fit_line(log_r, log_med).slope;
  if (stats.rows.size() >= 3) {
    std::vector<double> q99;
    for (const auto& row : stats.rows) q99.push_back(row.q99_abs);
    stats.transition_r = fit_two_term_decay(r_grid, q99).crossover_r;
  }
  return stats;
}

}  // namespace probeconv
