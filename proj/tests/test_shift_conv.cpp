#include <doctest.h>

#include "oracles.hpp"
#include "probeconv/conv.hpp"

using namespace probeconv;

namespace {

ChannelTensor random_tensor(ImageShape shape, int c, int b, std::uint64_t seed) {
  CounterRng rng(seed, 42);
  return ChannelTensor::random_normal(shape, c, b, rng);
}

ConvWeights random_weights(int c_in, int c_out, int k, std::uint64_t seed) {
  CounterRng rng(seed, 43);
  ConvWeights w(c_in, c_out, k);
  for (double& v : w.w) v = rng.normal();
  return w;
}

double dot_all(const ChannelTensor& a, const ChannelTensor& b) {
  double acc = 0.0;
  const auto sa = a.stacked();
  const auto sb = b.stacked();
  for (size_t i = 0; i < sa.size(); ++i) acc += sa[i] * sb[i];
  return acc;
}

}  // namespace

TEST_SUITE_BEGIN("shift_conv");

TEST_CASE("KernelOffsetMap enumerates dy-major ascending and is bijective") {
  const KernelOffsetMap map(3);
  CHECK(map.count() == 9);
  CHECK(map.offset(0) == ShiftOffset{-1, -1});
  CHECK(map.offset(1) == ShiftOffset{-1, 0});
  CHECK(map.offset(4) == ShiftOffset{0, 0});
  CHECK(map.offset(8) == ShiftOffset{1, 1});
  for (int i = 0; i < map.count(); ++i) CHECK(map.index(map.offset(i)) == i);
}

TEST_CASE("even or nonpositive kernels are rejected") {
  CHECK_THROWS_AS(KernelOffsetMap(2), dimension_error);
  CHECK_THROWS_AS(KernelOffsetMap(0), dimension_error);
  CHECK_THROWS_AS(KernelOffsetMap(-3), dimension_error);
}

TEST_CASE("identity kernel reproduces the input") {
  const auto x = random_tensor({4, 4}, 1, 3, 11);
  ConvWeights w(1, 1, 3);
  w.at(0, 0, w.offsets.index({0, 0})) = 1.0;
  CHECK(conv_forward(x, w) == x);
}

TEST_CASE("single off-center weight is a pure shift") {
  const auto x = random_tensor({3, 5}, 1, 2, 12);
  ConvWeights w(1, 1, 3);
  w.at(0, 0, w.offsets.index({0, 1})) = 1.0;
  const ChannelTensor y = conv_forward(x, w);
  for (int b = 0; b < x.batch(); ++b) {
    std::vector<double> col(static_cast<size_t>(x.pixels()));
    for (int p = 0; p < x.pixels(); ++p) col[size_t(p)] = x.at(0, p, b);
    const auto shifted = circular_shift(col, x.shape(), {0, 1});
    for (int p = 0; p < x.pixels(); ++p) CHECK(y.at(0, p, b) == shifted[size_t(p)]);
  }
}

TEST_CASE("conv_forward matches the dense shift-matrix oracle") {
  const auto x = random_tensor({4, 4}, 2, 3, 13);
  const auto w = random_weights(2, 2, 3, 14);
  const ChannelTensor got = conv_forward(x, w);
  const ChannelTensor want = oracles::dense_conv_forward(x, w);
  CHECK(oracles::max_rel_err(got.stacked(), want.stacked()) <= 1e-12);
}

TEST_CASE("conv_forward rejects channel mismatch") {
  const auto x = random_tensor({4, 4}, 3, 1, 15);
  const auto w = random_weights(2, 2, 3, 16);
  CHECK_THROWS_AS(conv_forward(x, w), dimension_error);
}

TEST_CASE("conv_forward is linear in the input") {
  const auto x1 = random_tensor({4, 4}, 2, 2, 17);
  const auto x2 = random_tensor({4, 4}, 2, 2, 18);
  const auto w = random_weights(2, 3, 3, 19);
  const double alpha = 1.25, beta = -0.5;

  ChannelTensor mix(x1.shape(), x1.channels(), x1.batch());
  for (size_t i = 0; i < mix.size(); ++i)
    mix.stacked()[i] = alpha * x1.stacked()[i] + beta * x2.stacked()[i];

  const ChannelTensor y_mix = conv_forward(mix, w);
  const ChannelTensor y1 = conv_forward(x1, w);
  const ChannelTensor y2 = conv_forward(x2, w);
  std::vector<double> want(y1.size());
  for (size_t i = 0; i < want.size(); ++i)
    want[i] = alpha * y1.stacked()[i] + beta * y2.stacked()[i];
  CHECK(oracles::max_rel_err(y_mix.stacked(), want) <= 1e-12);
}

TEST_CASE("zero residual gives a zero weight gradient") {
  const auto x = random_tensor({3, 3}, 2, 2, 20);
  const ChannelTensor dy(x.shape(), 3, x.batch());
  const WeightGrad g = grad_weights_exact(x, dy, KernelOffsetMap(3));
  for (double v : g.v) CHECK(v == 0.0);
}

TEST_CASE("one-hot input and residual pick out the connecting shift") {
  // x = e_p, dy = e_q: dw_i = 1 exactly when offset(i) moves p to q.
  const ImageShape shape{3, 3};
  const KernelOffsetMap offsets(3);
  const int p = shape.index(1, 1);
  for (int i_true = 0; i_true < offsets.count(); ++i_true) {
    const auto map = shift_index_map(shape, offsets.offset(i_true));
    const int q = map[size_t(p)];
    ChannelTensor x(shape, 1, 1), dy(shape, 1, 1);
    x.at(0, p, 0) = 1.0;
    dy.at(0, q, 0) = 1.0;
    const WeightGrad g = grad_weights_exact(x, dy, offsets);
    for (int i = 0; i < offsets.count(); ++i) {
      const auto mi = shift_index_map(shape, offsets.offset(i));
      const double want = mi[size_t(p)] == q ? 1.0 : 0.0;
      CHECK(g.at(0, 0, i) == want);
    }
  }
}

TEST_CASE("grad_weights_exact matches central finite differences") {
  const auto x = random_tensor({4, 4}, 2, 3, 21);
  auto w = random_weights(2, 2, 3, 22);
  const auto target = random_tensor({4, 4}, 2, 3, 23);

  ChannelTensor y = conv_forward(x, w);
  ChannelTensor residual(y.shape(), y.channels(), y.batch());
  for (size_t i = 0; i < y.size(); ++i)
    residual.stacked()[i] = y.stacked()[i] - target.stacked()[i];

  const WeightGrad got = grad_weights_exact(x, residual, w.offsets);
  const WeightGrad want = oracles::finite_difference_grad(x, w, target);
  CHECK(oracles::max_rel_err(got.v, want.v) <= 1e-6);
}

TEST_CASE("grad_weights_exact matches the dense trace oracle") {
  const auto x = random_tensor({5, 5}, 2, 2, 24);
  const auto dy = random_tensor({5, 5}, 3, 2, 25);
  const KernelOffsetMap offsets(3);
  const WeightGrad got = grad_weights_exact(x, dy, offsets);
  const WeightGrad want = oracles::dense_trace_grad(x, dy, offsets);
  CHECK(oracles::max_rel_err(got.v, want.v) <= 1e-12);
}

TEST_CASE("grad_input: identity kernel passes the residual through") {
  const auto dy = random_tensor({4, 4}, 1, 2, 26);
  ConvWeights w(1, 1, 3);
  w.at(0, 0, w.offsets.index({0, 0})) = 1.0;
  CHECK(grad_input_exact(dy, w) == dy);
}

TEST_CASE("grad_input: shift kernel applies the adjoint shift") {
  const auto dy = random_tensor({3, 4}, 1, 2, 27);
  ConvWeights w(1, 1, 3);
  w.at(0, 0, w.offsets.index({0, 1})) = 1.0;
  const ChannelTensor dx = grad_input_exact(dy, w);
  for (int b = 0; b < dy.batch(); ++b) {
    std::vector<double> col(static_cast<size_t>(dy.pixels()));
    for (int p = 0; p < dy.pixels(); ++p) col[size_t(p)] = dy.at(0, p, b);
    const auto shifted = circular_shift(col, dy.shape(), {0, -1});
    for (int p = 0; p < dy.pixels(); ++p) CHECK(dx.at(0, p, b) == shifted[size_t(p)]);
  }
}

TEST_CASE("forward/input-gradient adjoint identity") {
  const auto x = random_tensor({4, 5}, 2, 3, 28);
  const auto dy = random_tensor({4, 5}, 3, 3, 29);
  const auto w = random_weights(2, 3, 3, 30);
  const double lhs = dot_all(conv_forward(x, w), dy);
  const double rhs = dot_all(x, grad_input_exact(dy, w));
  CHECK(oracles::rel_err(lhs, rhs) <= 1e-12);
}

TEST_SUITE_END();
