#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "probeconv/bounds.hpp"
#include "probeconv/stats.hpp"
#include "probeconv/trace.hpp"

using namespace probeconv;

namespace {

Matrix random_square(int n, std::uint64_t seed) {
  CounterRng rng(seed, 777);
  return Matrix::random_gaussian(n, n, rng);
}

}  // namespace

TEST_SUITE_BEGIN("error_bounds");

TEST_CASE("norms of the identity and of rank-1 outer products") {
  const MatrixNorms id = norms(Matrix::identity(9));
  CHECK(id.spectral == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id.frobenius == doctest::Approx(3.0).epsilon(1e-12));

  CounterRng rng(1, 1);
  std::vector<double> u(8), v(8);
  double nu = 0.0, nv = 0.0;
  for (double& x : u) {
    x = rng.normal();
    nu += x * x;
  }
  for (double& x : v) {
    x = rng.normal();
    nv += x * x;
  }
  Matrix rank1(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      rank1(i, j) = u[size_t(i)] / std::sqrt(nu) * v[size_t(j)] / std::sqrt(nv);
  const MatrixNorms r1 = norms(rank1);
  CHECK(r1.spectral == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r1.frobenius == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spectral norm matches a power-iteration oracle") {
  const Matrix a = random_square(8, 2);
  const MatrixNorms nm = norms(a);
  const double want = oracles::power_iteration_spectral(a);
  CHECK(oracles::rel_err(nm.spectral, want) <= 1e-8);
}

TEST_CASE("norm inequalities hold on random matrices") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix a = random_square(12, 10 + s);
    const MatrixNorms nm = norms(a);
    CHECK(nm.spectral <= nm.frobenius + 1e-12);
    CHECK(nm.frobenius <= std::sqrt(12.0) * nm.spectral + 1e-12);
  }
}

TEST_CASE("norms enforces the capacity guard") {
  CHECK_THROWS_AS(norms(Matrix(4097, 4097)), capacity_error);
}

TEST_CASE("prop1 bound: zero matrix, plug-in value, monotonicity") {
  CHECK(prop1_bound({0.0, 0.0, 4}, 8, 0.25) == 0.0);

  // spectral = frobenius = 1, r = 1, delta = 2/e makes log(2/delta) = 1:
  // 4*1*1 + 2*1*1 = 6.
  const double delta = 2.0 / std::exp(1.0);
  CHECK(prop1_bound({1.0, 1.0, 4}, 1, delta) == doctest::Approx(6.0).epsilon(1e-12));

  const MatrixNorms nm{2.0, 3.0, 16};
  double prev = prop1_bound(nm, 1, 0.1);
  for (int r : {2, 4, 8, 16, 512}) {
    const double cur = prop1_bound(nm, r, 0.1);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prop1_bound(nm, 8, 0.2) < prop1_bound(nm, 8, 0.1));
  CHECK_THROWS_AS(prop1_bound(nm, 8, 0.0), domain_error);
  CHECK_THROWS_AS(prop1_bound(nm, 8, 1.0), domain_error);
  CHECK_THROWS_AS(prop1_bound(nm, 0, 0.1), domain_error);
}

TEST_CASE("effective rank of identity and rank-1") {
  const EffectiveRank id = effective_rank(norms(Matrix::identity(16)), 0.1);
  CHECK(id.rho == doctest::Approx(16.0).epsilon(1e-9));

  MatrixNorms r1{1.0, 1.0, 16};
  const EffectiveRank er = effective_rank(r1, 0.1);
  CHECK(er.rho == doctest::Approx(1.0));
  CHECK(er.r_star == doctest::Approx(4.0 * std::log(20.0)));

  for (std::uint64_t s = 0; s < 4; ++s) {
    const Matrix a = random_square(10, 20 + s);
    const EffectiveRank r = effective_rank(norms(a), 0.1);
    CHECK(r.rho >= 1.0 - 1e-12);
    CHECK(r.rho <= 10.0 + 1e-12);
  }
  CHECK_THROWS_AS(effective_rank(MatrixNorms{0.0, 0.0, 4}, 0.1), domain_error);
}

TEST_CASE("thm2 bound: zero blocks, single-channel shape, plug-in arithmetic") {
  const BlockSparsity one = BlockSparsity::dense(1);

  std::vector<std::vector<MatrixNorms>> zero{{MatrixNorms{0.0, 0.0, 4}}};
  CHECK(thm2_bound(zero, one, 0, 0, 8, 0.1, 1.0).bound_value == 0.0);

  // Single channel, p = 1: c * (S/r log(1/d) + F/sqrt(r) log^{1/2}(1/d)).
  std::vector<std::vector<MatrixNorms>> single{{MatrixNorms{2.0, 3.0, 4}}};
  const double delta = 0.25;
  const BoundReport rep = thm2_bound(single, one, 0, 0, 16, delta, 1.5);
  const double log_term = std::log(1.0 / delta);
  const double want =
      1.5 * (2.0 / 16.0 * log_term + 3.0 / 4.0 * std::sqrt(log_term));
  CHECK(rep.bound_value == doctest::Approx(want).epsilon(1e-12));
  CHECK(rep.regime == BoundRegime::large_r);
  CHECK(rep.succinct_bound < rep.bound_value);

  // Two channels with hand norms: check the cross-term weights.
  std::vector<std::vector<MatrixNorms>> grid{
      {MatrixNorms{1.0, 2.0, 4}, MatrixNorms{3.0, 5.0, 4}},
      {MatrixNorms{0.5, 1.0, 4}, MatrixNorms{2.0, 4.0, 4}}};
  BlockSparsity sp;
  sp.probs = {0.5, 0.25};
  const int r = 64;
  const double d2 = 0.1;
  const BoundReport got = thm2_bound(grid, sp, 0, 0, r, d2, 2.0);
  const double lt = std::log(4.0 / d2);
  const double small = (1.0 + 3.0) / (0.5 * r) * lt;
  const double large =
      (2.0 / std::sqrt(0.5) + std::sqrt(0.25 / 0.5) * 5.0) / std::sqrt(double(r)) *
      std::sqrt(lt);
  CHECK(got.bound_value == doctest::Approx(2.0 * (small + large)).epsilon(1e-12));
  // failure_prob_extra = 2 * C_in * exp(-r p_min^2 / 2)
  CHECK(got.failure_prob_extra ==
        doctest::Approx(4.0 * std::exp(-64.0 * 0.0625 / 2.0)).epsilon(1e-12));
}

TEST_CASE("lemma bound evaluators") {
  const MatrixNorms nm{2.0, 3.0, 8};
  const double l2 = lemma2_bound(nm, 4, 0.5, 1.0);
  const double want2 =
      2.0 / 4.0 * std::log(4.0) + 3.0 / 2.0 * std::sqrt(std::log(4.0));
  CHECK(l2 == doctest::Approx(want2).epsilon(1e-12));
  // p = 1 reduces lemma3 to lemma2; smaller p shrinks the Frobenius part.
  CHECK(lemma3_bound(nm, 1.0, 4, 0.5, 1.0) == doctest::Approx(l2).epsilon(1e-12));
  CHECK(lemma3_bound(nm, 0.25, 4, 0.5, 1.0) < l2);
}

TEST_CASE("lemma2 with a moderate constant covers bilinear forms") {
  // (1/r) sum z_j^T A x_j with independent probes; c = 2 covers delta = 0.1.
  const Matrix a = random_square(16, 30);
  const MatrixNorms nm = norms(a);
  const int r = 8, trials = 2000;
  const double delta = 0.1;
  const double bound = lemma2_bound(nm, r, delta, 2.0);
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    const NormalStream zs({31, std::uint64_t(t)});
    double total = 0.0;
    std::vector<double> z(16), x(16), az(16);
    for (int j = 0; j < r; ++j) {
      zs.fill(std::uint64_t(32 * j), z);
      zs.fill(std::uint64_t(32 * j + 16), x);
      matvec(a, x, az);
      for (int i = 0; i < 16; ++i) total += z[size_t(i)] * az[size_t(i)];
    }
    failures += std::abs(total / r) > bound ? 1 : 0;
  }
  CHECK(double(failures) / trials <=
        delta + 3.0 * std::sqrt(delta * (1 - delta) / trials));
}

TEST_CASE("prop1 coverage: failure rate stays within delta plus noise") {
  const Matrix a = random_square(32, 40);
  const double delta = 0.1;
  const CoverageResult res = coverage_prop1(a, delta, 64, 2000, {41, 1});
  CHECK(res.trials == 2000);
  CHECK(res.failure_rate <=
        delta + 3.0 * std::sqrt(delta * (1 - delta) / res.trials));
}

TEST_CASE("prop1 coverage on the zero matrix never fails") {
  const Matrix zero(16, 16);
  const CoverageResult res = coverage_prop1(zero, 0.1, 8, 500, {42, 1});
  CHECK(res.failures == 0);
}

TEST_CASE("tightening delta weakly decreases the failure rate") {
  const Matrix a = random_square(24, 43);
  const CoverageResult loose = coverage_prop1(a, 0.1, 16, 2000, {44, 1});
  const CoverageResult tight = coverage_prop1(a, 0.01, 16, 2000, {44, 1});
  CHECK(tight.failure_rate <= loose.failure_rate);
}

TEST_CASE("thm2 coverage with a fitted constant c <= 10") {
  const int n = 8, c_blocks = 2;
  const Matrix stacked = random_square(n * c_blocks, 50);
  const BlockSparsity sp = BlockSparsity::uniform(c_blocks, 0.5);
  const double delta = 0.1;
  const double c = fit_thm2_constant(stacked, n, c_blocks, sp, delta, 32, 1000,
                                     {51, 1});
  CHECK(c > 0.0);
  CHECK(c <= 10.0);
  const CoverageResult res =
      coverage_thm2(stacked, n, c_blocks, sp, delta, 32, 1000, c, {51, 1});
  CHECK(res.failure_rate <=
        delta + 3.0 * std::sqrt(delta * (1 - delta) / res.trials));
}

TEST_SUITE_END();
