#include <doctest.h>

#include "oracles.hpp"
#include "probeconv/image.hpp"
#include "probeconv/matrix.hpp"
#include "probeconv/rng.hpp"

using namespace probeconv;

TEST_SUITE_BEGIN("tensor_core");

TEST_CASE("circular_shift identity offset returns input") {
  CounterRng rng(1, 1);
  const ImageShape shape{3, 5};
  std::vector<double> x(static_cast<size_t>(shape.pixels()));
  for (double& v : x) v = rng.normal();
  CHECK(circular_shift(x, shape, {0, 0}) == x);
}

TEST_CASE("circular_shift composes with its inverse bit-exactly") {
  CounterRng rng(2, 7);
  for (const ImageShape shape : {ImageShape{2, 2}, ImageShape{4, 6}, ImageShape{7, 3}}) {
    std::vector<double> x(static_cast<size_t>(shape.pixels()));
    for (double& v : x) v = rng.normal();
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const ShiftOffset o{dy, dx};
        const auto roundtrip =
            circular_shift(circular_shift(x, shape, o), shape, adjoint_offset(o));
        CHECK(roundtrip == x);
      }
    }
  }
}

TEST_CASE("shift by (0,1) then (0,-1) is the identity") {
  const ImageShape shape{2, 3};
  std::vector<double> x{1, 2, 3, 4, 5, 6};
  const auto y = circular_shift(circular_shift(x, shape, {0, 1}), shape, {0, -1});
  CHECK(y == x);
}

TEST_CASE("2x2 shift by (1,0) permutes rows") {
  // Row-major: [1,2 / 3,4] shifted down by one wraps to [3,4 / 1,2].
  const ImageShape shape{2, 2};
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> want{3, 4, 1, 2};
  CHECK(circular_shift(x, shape, {1, 0}) == want);
}

TEST_CASE("circular_shift rejects wrong lengths") {
  std::vector<double> x(5, 0.0);
  std::vector<double> out(5, 0.0);
  CHECK_THROWS_AS(circular_shift(x, ImageShape{2, 3}, {0, 0}, out), dimension_error);
}

TEST_CASE("adjoint_offset negates") {
  CHECK(adjoint_offset({0, 0}) == ShiftOffset{0, 0});
  CHECK(adjoint_offset({1, 2}) == ShiftOffset{-1, -2});
  CHECK(adjoint_offset({-3, 1}) == ShiftOffset{3, -1});
}

TEST_CASE("dense_shift_matrix: identity at zero offset") {
  CHECK(dense_shift_matrix(ImageShape{2, 3}, {0, 0}) == Matrix::identity(6));
}

TEST_CASE("dense_shift_matrix is a permutation matrix") {
  const ImageShape shape{3, 4};
  for (const ShiftOffset o : {ShiftOffset{1, 2}, ShiftOffset{-1, 3}, ShiftOffset{2, -2}}) {
    const Matrix p = dense_shift_matrix(shape, o);
    for (int i = 0; i < p.rows(); ++i) {
      double row_sum = 0.0, col_sum = 0.0;
      for (int j = 0; j < p.cols(); ++j) {
        row_sum += p(i, j);
        col_sum += p(j, i);
        CHECK((p(i, j) == 0.0 || p(i, j) == 1.0));
      }
      CHECK(row_sum == 1.0);
      CHECK(col_sum == 1.0);
    }
  }
}

TEST_CASE("dense_shift_matrix transpose equals adjoint offset matrix") {
  const ImageShape shape{4, 3};
  CounterRng rng(3, 3);
  for (int trial = 0; trial < 8; ++trial) {
    const ShiftOffset o{int(rng.next_below(9)) - 4, int(rng.next_below(9)) - 4};
    CHECK(transpose(dense_shift_matrix(shape, o)) ==
          dense_shift_matrix(shape, adjoint_offset(o)));
  }
}

TEST_CASE("dense_shift_matrix agrees with circular_shift elementwise") {
  CounterRng rng(4, 9);
  const ImageShape shape{5, 4};
  std::vector<double> x(static_cast<size_t>(shape.pixels()));
  for (double& v : x) v = rng.normal();
  for (const ShiftOffset o : {ShiftOffset{0, 1}, ShiftOffset{2, 3}, ShiftOffset{-1, -2}}) {
    const Matrix p = dense_shift_matrix(shape, o);
    std::vector<double> px(x.size());
    matvec(p, x, px);
    CHECK(px == circular_shift(x, shape, o));
  }
}

TEST_CASE("dense_shift_matrix enforces the capacity guard") {
  CHECK_THROWS_AS(dense_shift_matrix(ImageShape{65, 65}, {0, 0}), capacity_error);
}

TEST_CASE("trace cyclicity through the shift permutation") {
  CounterRng rng(5, 11);
  const ImageShape shape{3, 3};
  Matrix a = Matrix::random_gaussian(9, 9, rng);
  for (const ShiftOffset o : {ShiftOffset{1, 0}, ShiftOffset{1, 2}}) {
    const Matrix p = dense_shift_matrix(shape, adjoint_offset(o));
    double t1 = 0.0, t2 = 0.0;
    const Matrix ap = matmul(a, p);
    const Matrix pa = matmul(p, a);
    for (int i = 0; i < 9; ++i) {
      t1 += ap(i, i);
      t2 += pa(i, i);
    }
    CHECK(t1 == doctest::Approx(t2).epsilon(1e-12));
  }
}

TEST_CASE("ChannelTensor validates dimensions and finiteness") {
  CHECK_THROWS_AS(ChannelTensor(ImageShape{0, 3}, 1, 1), dimension_error);
  CHECK_THROWS_AS(ChannelTensor(ImageShape{2, 2}, 0, 1), dimension_error);
  ChannelTensor t(ImageShape{2, 2}, 1, 2);
  t.at(0, 1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(t.require_finite(), domain_error);
}

TEST_SUITE_END();
