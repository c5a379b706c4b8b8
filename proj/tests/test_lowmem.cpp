#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "probeconv/lowmem.hpp"
#include "probeconv/stats.hpp"

using namespace probeconv;

namespace {

ChannelTensor random_tensor(ImageShape shape, int c, int b, std::uint64_t seed) {
  CounterRng rng(seed, 142);
  return ChannelTensor::random_normal(shape, c, b, rng);
}

ConvWeights random_weights(int c_in, int c_out, int k, std::uint64_t seed) {
  CounterRng rng(seed, 143);
  ConvWeights w(c_in, c_out, k);
  for (double& v : w.w) v = rng.normal();
  return w;
}

LowMemConvConfig make_cfg(int r, int c_in, int c_out, int k, std::uint64_t seed,
                          bool dense = false) {
  return LowMemConvConfig(r,
                          dense ? BlockSparsity::dense(c_in)
                                : BlockSparsity::default_for(c_in),
                          random_weights(c_in, c_out, k, seed));
}

}  // namespace

TEST_SUITE_BEGIN("lowmem_layer");

TEST_CASE("forward output equals the exact convolution bit-for-bit") {
  const auto x = random_tensor({4, 6}, 3, 2, 1);
  const auto cfg = make_cfg(8, 3, 2, 3, 2);
  const auto [y, ctx] = forward_compressed(x, cfg, {10, 1});
  CHECK(y == conv_forward(x, cfg.weights));
  CHECK(ctx.r() == 8);
}

TEST_CASE("context stores exactly r*B scalars") {
  {
    const auto x = random_tensor({4, 4}, 2, 3, 3);
    const auto cfg = make_cfg(5, 2, 2, 3, 4);
    const auto [y, ctx] = forward_compressed(x, cfg, {11, 1});
    CHECK(ctx.stored_scalars() == 5u * 3u);
  }
  {
    // N = 1024, C_in = 16, B = 8, r = 128: 1024 scalars vs 131072 -- x128.
    const auto x = random_tensor({32, 32}, 16, 8, 5);
    const auto cfg = make_cfg(128, 16, 1, 3, 6);
    const auto [y, ctx] = forward_compressed(x, cfg, {12, 1});
    CHECK(ctx.stored_scalars() == 128u * 8u);
    const FootprintReport f = memory_footprint(1024, 16, 128, 8);
    CHECK(f.stored_scalars == 128u * 8u);
    CHECK(f.exact_scalars == 1024u * 16u * 8u);
    CHECK(f.reduction_factor == 128.0);
  }
}

TEST_CASE("identity probe reconstructs the input exactly") {
  const auto x = random_tensor({3, 3}, 2, 4, 7);
  const auto cfg = make_cfg(9 * 2, 2, 1, 3, 8, /*dense=*/true);
  const ProbeMatrix z = ProbeMatrix::identity(9, 2);
  const auto [y, ctx] = forward_compressed_with_probe(x, cfg, z);
  // xbar = I^T X: row j of xbar is stacked row j of x.
  for (int j = 0; j < 18; ++j) {
    const int c = j / 9, p = j % 9;
    for (int b = 0; b < 4; ++b) CHECK(ctx.xbar_row(j)[size_t(b)] == x.at(c, p, b));
  }
}

TEST_CASE("zero residual gives an exactly zero gradient") {
  const auto x = random_tensor({4, 4}, 2, 2, 9);
  const auto cfg = make_cfg(4, 2, 2, 3, 10);
  const auto [y, ctx] = forward_compressed(x, cfg, {13, 1});
  const ChannelTensor dy(x.shape(), 2, x.batch());
  const WeightGrad g = backward_weights(ctx, dy, cfg);
  for (double v : g.v) CHECK(v == 0.0);
}

TEST_CASE("single-channel dense probing matches the straight-line formula bit-exactly") {
  const auto x = random_tensor({4, 4}, 1, 3, 11);
  const auto dy = random_tensor({4, 4}, 1, 3, 12);
  const auto cfg = make_cfg(6, 1, 1, 3, 13, /*dense=*/true);
  const ProbeSeed seed{14, 2};

  const auto [y, ctx] = forward_compressed(x, cfg, seed);
  const WeightGrad got = backward_weights(ctx, dy, cfg);

  const ProbeMatrix z = gen_gaussian(16, 1, 6, seed);
  const WeightGrad want =
      oracles::straightline_single_channel_probe(x, dy, cfg.weights.offsets, z);
  for (size_t i = 0; i < got.v.size(); ++i) CHECK(got.v[i] == want.v[i]);
}

TEST_CASE("backward replay is bit-deterministic") {
  const auto x = random_tensor({4, 4}, 2, 2, 15);
  const auto dy = random_tensor({4, 4}, 3, 2, 16);
  const auto cfg = make_cfg(8, 2, 3, 3, 17);
  const auto [y, ctx] = forward_compressed(x, cfg, {18, 5});
  const WeightGrad a = backward_weights(ctx, dy, cfg);
  const WeightGrad b = backward_weights(ctx, dy, cfg);
  CHECK(a.v == b.v);
}

TEST_CASE("config drift is rejected at backward") {
  const auto x = random_tensor({4, 4}, 2, 2, 19);
  const auto dy = random_tensor({4, 4}, 2, 2, 20);
  const auto cfg = make_cfg(8, 2, 2, 3, 21);
  const auto [y, ctx] = forward_compressed(x, cfg, {22, 1});

  LowMemConvConfig drifted_r(4, cfg.sparsity, cfg.weights);
  CHECK_THROWS_AS(backward_weights(ctx, dy, drifted_r), context_error);
  LowMemConvConfig drifted_sp(8, BlockSparsity::dense(2), cfg.weights);
  CHECK_THROWS_AS(backward_weights(ctx, dy, drifted_sp), context_error);
}

TEST_CASE("probed gradients are unbiased: multi, multi-ortho, indep") {
  // N = 4x4, C_in = C_out = 2, K = 3, B = 2, r = 8: Monte Carlo mean of every
  // coefficient within 4 standard errors of the exact gradient.
  const auto x = random_tensor({4, 4}, 2, 2, 23);
  const auto dy = random_tensor({4, 4}, 2, 2, 24);
  const auto weights = random_weights(2, 2, 3, 25);
  const WeightGrad exact = grad_weights_exact(x, dy, weights.offsets);
  const int trials = 3000;

  auto check_mode = [&](auto&& sample_grad) {
    const size_t n_coeff = exact.v.size();
    std::vector<std::vector<double>> samples(n_coeff,
                                             std::vector<double>(trials));
    for (int t = 0; t < trials; ++t) {
      const WeightGrad g = sample_grad(std::uint64_t(t));
      for (size_t k = 0; k < n_coeff; ++k) samples[k][size_t(t)] = g.v[k];
    }
    for (size_t k = 0; k < n_coeff; ++k) {
      const double se = standard_error(samples[k]);
      CHECK(std::abs(mean(samples[k]) - exact.v[k]) <= 4.0 * se);
    }
  };

  SUBCASE("multi") {
    const LowMemConvConfig cfg(8, BlockSparsity::dense(2), weights);
    check_mode([&](std::uint64_t s) {
      const auto [y, ctx] = forward_compressed(x, cfg, {26, s});
      return backward_weights(ctx, dy, cfg);
    });
  }
  SUBCASE("multi-ortho") {
    const LowMemConvConfig cfg(8, BlockSparsity::default_for(2), weights);
    check_mode([&](std::uint64_t s) {
      const auto [y, ctx] = forward_compressed(x, cfg, {27, s});
      return backward_weights(ctx, dy, cfg);
    });
  }
  SUBCASE("indep") {
    check_mode([&](std::uint64_t s) {
      return probed_grad_indep(x, dy, weights.offsets, 8, {28, s});
    });
  }
}

TEST_CASE("backward_input matches the exact input gradient") {
  const auto dy = random_tensor({4, 4}, 3, 2, 29);
  const auto cfg = make_cfg(4, 2, 3, 3, 30);
  CHECK(backward_input(dy, cfg) == grad_input_exact(dy, cfg.weights));
}

TEST_CASE("memory footprint examples") {
  CHECK(memory_footprint(1024, 16, 128, 1).reduction_factor == 128.0);
  const FootprintReport lossless = memory_footprint(16, 2, 32, 4);
  CHECK(lossless.reduction_factor == 1.0);
  CHECK(lossless.stored_scalars == lossless.exact_scalars);
  CHECK(memory_footprint(28 * 28, 1, 16, 1).reduction_factor == 49.0);
  CHECK_THROWS_AS(memory_footprint(0, 1, 1, 1), domain_error);
}

TEST_SUITE_END();
