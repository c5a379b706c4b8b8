#include "probeconv/probing.hpp"

#include <cmath>

namespace probeconv {

ProbeMatrix gen_gaussian(int n, int c_in, int r, ProbeSeed seed) {
  return gen_block_sparse(n, c_in, r, BlockSparsity::dense(c_in), seed, 1);
}

ProbeMatrix gen_block_sparse(int n, int c_in, int r, const BlockSparsity& sp,
                             ProbeSeed seed, int max_attempts) {
  sp.validate(c_in);
  if (max_attempts < 1 || max_attempts > 16)
    throw domain_error("gen_block_sparse: max_attempts must be in [1, 16]");

  ProbeMatrix z(n, c_in, r, seed);
  const std::uint64_t stacked = std::uint64_t(z.stacked_dim());

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const MaskStream ms(seed, unsigned(attempt));
    std::fill(z.mask_.begin(), z.mask_.end(), std::uint8_t{0});
    std::fill(z.nnz_.begin(), z.nnz_.end(), 0);

    bool ok = true;
    for (int nb = 0; nb < c_in; ++nb) {
      const double p = sp.probs[size_t(nb)];
      const bool always = p >= 1.0;
      int count = 0;
      for (int j = 0; j < r; ++j) {
        const bool on = always || ms.at(std::uint64_t(nb) * r + j) < p;
        z.mask_[size_t(nb) * r + j] = on ? 1 : 0;
        count += on ? 1 : 0;
      }
      z.nnz_[size_t(nb)] = count;
      if (count == 0) ok = false;
    }
    if (!ok) continue;

    // Normal index of entry (stacked row s, probe j) is t = j*stacked + s.
    // Position-based addressing means a zeroed block never shifts the draws
    // of any other block, so p_n = 1 reproduces the dense matrix bit-for-bit.
    const NormalStream ns(seed, unsigned(attempt));
    std::fill(z.values_.begin(), z.values_.end(), 0.0);
    for (int j = 0; j < r; ++j) {
      for (int nb = 0; nb < c_in; ++nb) {
        if (!z.active(nb, j)) continue;
        double* dst = z.values_.data() + size_t(j) * stacked + size_t(nb) * n;
        ns.fill(std::uint64_t(j) * stacked + std::uint64_t(nb) * n,
                {dst, size_t(n)});
      }
    }
    z.attempt_ = unsigned(attempt);
    return z;
  }
  throw sparsity_error(
      "gen_block_sparse: a block row stayed all-zero after redraw budget");
}

ProbeMatrix ProbeMatrix::identity(int n, int c_in) {
  const int r = n * c_in;
  ProbeMatrix z(n, c_in, r, ProbeSeed{});
  for (int j = 0; j < r; ++j) z.values_[size_t(j) * r + j] = 1.0;
  std::fill(z.mask_.begin(), z.mask_.end(), std::uint8_t{1});
  std::fill(z.nnz_.begin(), z.nnz_.end(), r);
  return z;
}

Matrix block_gram(const ProbeMatrix& z) {
  const int c = z.block_count();
  const int r = z.probes();
  const int n = z.block_size();

  // Entry (a,b) = || M_ab - [a==b] I ||_F with M_ab = (1/nnz(a)) sum_j z_a z_b^T.
  // Evaluated through the r x r per-block Gram matrices G_a = Z_a^T Z_a:
  //   || sum_j z_{a,j} z_{b,j}^T ||_F^2 = <G_a, G_b>_F
  // which avoids forming any n x n matrix.
  std::vector<Matrix> grams;
  grams.reserve(size_t(c));
  for (int a = 0; a < c; ++a) {
    Matrix g(r, r);
    for (int j = 0; j < r; ++j) {
      if (!z.active(a, j)) continue;
      const auto zj = z.block(a, j);
      for (int k = j; k < r; ++k) {
        if (!z.active(a, k)) continue;
        const auto zk = z.block(a, k);
        double dot = 0.0;
        for (int t = 0; t < n; ++t) dot += zj[t] * zk[t];
        g(j, k) = dot;
        g(k, j) = dot;
      }
    }
    grams.push_back(std::move(g));
  }

  Matrix out(c, c);
  for (int a = 0; a < c; ++a) {
    const double scale = 1.0 / z.nnz(a);
    for (int b = 0; b < c; ++b) {
      double frob2 = 0.0;
      const auto& ga = grams[size_t(a)];
      const auto& gb = grams[size_t(b)];
      for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k) frob2 += ga(j, k) * gb(j, k);
      frob2 *= scale * scale;
      if (a == b) {
        double trace = 0.0;
        for (int j = 0; j < r; ++j) trace += ga(j, j);
        frob2 += double(n) - 2.0 * scale * trace;
      }
      out(a, b) = std::sqrt(std::max(0.0, frob2));
    }
  }
  return out;
}

}  // namespace probeconv
