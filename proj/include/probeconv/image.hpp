#pragma once

#include <span>
#include <vector>

#include "probeconv/errors.hpp"
#include "probeconv/matrix.hpp"

namespace probeconv {

/// 2-D image geometry. Pixels are flattened row-major everywhere:
/// pixel index = row * width + col. This convention is global; the shift
/// operators, the convolutions, and every oracle agree on it.
struct ImageShape {
  int height = 0;
  int width = 0;

  int pixels() const { return height * width; }
  int index(int row, int col) const { return row * width + col; }

  void validate() const {
    if (height <= 0 || width <= 0)
      throw dimension_error("ImageShape: height and width must be positive");
  }

  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// 2-D circular shift offset. Offsets compose additively modulo
/// (height, width); the adjoint (= inverse, the operator is a permutation)
/// is the negated offset.
struct ShiftOffset {
  int dy = 0;
  int dx = 0;

  friend bool operator==(const ShiftOffset&, const ShiftOffset&) = default;
};

inline ShiftOffset adjoint_offset(ShiftOffset o) { return {-o.dy, -o.dx}; }

namespace shift_detail {
inline int wrap(int v, int m) {
  v %= m;
  return v < 0 ? v + m : v;
}
}  // namespace shift_detail

/// Destination table of the shift: map[p] is where pixel p lands.
/// out[map[p]] = in[p].
inline std::vector<int> shift_index_map(ImageShape shape, ShiftOffset off) {
  shape.validate();
  const int dy = shift_detail::wrap(off.dy, shape.height);
  const int dx = shift_detail::wrap(off.dx, shape.width);
  std::vector<int> map(static_cast<size_t>(shape.pixels()));
  for (int r = 0; r < shape.height; ++r) {
    const int tr = r + dy >= shape.height ? r + dy - shape.height : r + dy;
    for (int c = 0; c < shape.width; ++c) {
      const int tc = c + dx >= shape.width ? c + dx - shape.width : c + dx;
      map[size_t(shape.index(r, c))] = shape.index(tr, tc);
    }
  }
  return map;
}

/// out[(r+dy mod H)*W + (c+dx mod W)] = in[r*W + c]. Pure permutation; index
/// arithmetic only, so a shift composed with its adjoint restores the input
/// bit-exactly.
inline void circular_shift(std::span<const double> in, ImageShape shape,
                           ShiftOffset off, std::span<double> out) {
  shape.validate();
  if (int(in.size()) != shape.pixels() || int(out.size()) != shape.pixels())
    throw dimension_error("circular_shift: vector length != pixels");
  const int dy = shift_detail::wrap(off.dy, shape.height);
  const int dx = shift_detail::wrap(off.dx, shape.width);
  for (int r = 0; r < shape.height; ++r) {
    const int tr = r + dy >= shape.height ? r + dy - shape.height : r + dy;
    const double* src = in.data() + size_t(r) * shape.width;
    double* dst = out.data() + size_t(tr) * shape.width;
    for (int c = 0; c < shape.width; ++c) {
      const int tc = c + dx >= shape.width ? c + dx - shape.width : c + dx;
      dst[tc] = src[c];
    }
  }
}

inline std::vector<double> circular_shift(std::span<const double> in,
                                          ImageShape shape, ShiftOffset off) {
  std::vector<double> out(in.size());
  circular_shift(in, shape, off, out);
  return out;
}

/// Dense-allocation guard for the permutation-matrix oracle.
inline constexpr int kDenseShiftLimit = 4096;

/// Explicit permutation matrix P with P*x == circular_shift(x, off).
/// Test oracle only; production code never materializes shifts.
inline Matrix dense_shift_matrix(ImageShape shape, ShiftOffset off) {
  shape.validate();
  if (shape.pixels() > kDenseShiftLimit)
    throw capacity_error("dense_shift_matrix: N exceeds dense limit");
  const auto map = shift_index_map(shape, off);
  Matrix p(shape.pixels(), shape.pixels());
  for (int j = 0; j < shape.pixels(); ++j) p(map[size_t(j)], j) = 1.0;
  return p;
}

}  // namespace probeconv
