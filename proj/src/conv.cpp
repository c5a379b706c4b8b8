#include "probeconv/conv.hpp"

namespace probeconv {

namespace {

std::vector<std::vector<int>> offset_maps(const KernelOffsetMap& offsets,
                                          ImageShape shape) {
  std::vector<std::vector<int>> maps;
  maps.reserve(size_t(offsets.count()));
  for (int i = 0; i < offsets.count(); ++i)
    maps.push_back(shift_index_map(shape, offsets.offset(i)));
  return maps;
}

}  // namespace

ChannelTensor conv_forward(const ChannelTensor& x, const ConvWeights& w) {
  if (x.channels() != w.c_in)
    throw dimension_error("conv_forward: input channels != weight c_in");
  ChannelTensor y(x.shape(), w.c_out, x.batch());
  const auto maps = offset_maps(w.offsets, x.shape());
  const int nw = w.offsets.count();
  const int pixels = x.pixels();
  const int batch = x.batch();

  for (int m = 0; m < w.c_out; ++m) {
    for (int n = 0; n < w.c_in; ++n) {
      for (int i = 0; i < nw; ++i) {
        const double wi = w.at(m, n, i);
        if (wi == 0.0) continue;
        const auto& map = maps[size_t(i)];
        for (int p = 0; p < pixels; ++p) {
          const auto src = x.row(n, p);
          const auto dst = y.row(m, map[size_t(p)]);
          for (int b = 0; b < batch; ++b) dst[b] += wi * src[b];
        }
      }
    }
  }
  return y;
}

WeightGrad grad_weights_exact(const ChannelTensor& x, const ChannelTensor& dy,
                              const KernelOffsetMap& offsets) {
  if (!(x.shape() == dy.shape()) || x.batch() != dy.batch())
    throw dimension_error("grad_weights_exact: x and dy dims differ");
  WeightGrad g(dy.channels(), x.channels(), offsets.count());
  const auto maps = offset_maps(offsets, x.shape());
  const int pixels = x.pixels();
  const int batch = x.batch();

  for (int m = 0; m < dy.channels(); ++m) {
    for (int n = 0; n < x.channels(); ++n) {
      for (int i = 0; i < offsets.count(); ++i) {
        const auto& map = maps[size_t(i)];
        double acc = 0.0;
        for (int p = 0; p < pixels; ++p) {
          const auto xr = x.row(n, p);
          const auto dr = dy.row(m, map[size_t(p)]);
          for (int b = 0; b < batch; ++b) acc += xr[b] * dr[b];
        }
        g.at(m, n, i) = acc;
      }
    }
  }
  return g;
}

ChannelTensor grad_input_exact(const ChannelTensor& dy, const ConvWeights& w) {
  if (dy.channels() != w.c_out)
    throw dimension_error("grad_input_exact: dy channels != weight c_out");
  ChannelTensor dx(dy.shape(), w.c_in, dy.batch());
  const auto maps = offset_maps(w.offsets, dy.shape());
  const int nw = w.offsets.count();
  const int pixels = dy.pixels();
  const int batch = dy.batch();

  // Forward scatters x[n][p] into y[m][map_i(p)], so the adjoint gathers
  // dy[m][map_i(p)] back into dx[n][p] with the same index tables.
  for (int n = 0; n < w.c_in; ++n) {
    for (int m = 0; m < w.c_out; ++m) {
      for (int i = 0; i < nw; ++i) {
        const double wi = w.at(m, n, i);
        if (wi == 0.0) continue;
        const auto& map = maps[size_t(i)];
        for (int p = 0; p < pixels; ++p) {
          const auto src = dy.row(m, map[size_t(p)]);
          const auto dst = dx.row(n, p);
          for (int b = 0; b < batch; ++b) dst[b] += wi * src[b];
        }
      }
    }
  }
  return dx;
}

}  // namespace probeconv
