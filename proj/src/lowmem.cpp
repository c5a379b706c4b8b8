#include "probeconv/lowmem.hpp"

#include "probeconv/image.hpp"

namespace probeconv {

namespace {

ProbeMatrix draw_probes(const LowMemConvConfig& cfg, ImageShape shape,
                        ProbeSeed seed) {
  return gen_block_sparse(shape.pixels(), cfg.weights.c_in, cfg.r,
                          cfg.sparsity, seed);
}

void compress(const ChannelTensor& x, const ProbeMatrix& z,
              CompressedActivation& ctx) {
  const int batch = x.batch();
  const int pixels = x.pixels();
  for (int j = 0; j < z.probes(); ++j) {
    const auto out = ctx.xbar_row(j);
    for (int n = 0; n < x.channels(); ++n) {
      if (!z.active(n, j)) continue;
      const auto zb = z.block(n, j);
      for (int p = 0; p < pixels; ++p) {
        const double zv = zb[size_t(p)];
        const auto xr = x.row(n, p);
        for (int b = 0; b < batch; ++b) out[b] += zv * xr[b];
      }
    }
  }
}

}  // namespace

std::pair<ChannelTensor, CompressedActivation> forward_compressed_with_probe(
    const ChannelTensor& x, const LowMemConvConfig& cfg, const ProbeMatrix& z) {
  if (x.channels() != cfg.weights.c_in)
    throw dimension_error("forward_compressed: channels != cfg c_in");
  if (z.block_size() != x.pixels() || z.block_count() != x.channels())
    throw dimension_error("forward_compressed: probe dims do not match input");

  ChannelTensor y = conv_forward(x, cfg.weights);
  CompressedActivation ctx(x.shape(), x.channels(), z.probes(), x.batch(),
                           cfg.sparsity, z.seed());
  compress(x, z, ctx);
  return {std::move(y), std::move(ctx)};
}

std::pair<ChannelTensor, CompressedActivation> forward_compressed(
    const ChannelTensor& x, const LowMemConvConfig& cfg, ProbeSeed iter_seed) {
  if (x.channels() != cfg.weights.c_in)
    throw dimension_error("forward_compressed: channels != cfg c_in");
  const ProbeMatrix z = draw_probes(cfg, x.shape(), iter_seed);
  return forward_compressed_with_probe(x, cfg, z);
}

WeightGrad backward_weights(const CompressedActivation& ctx,
                            const ChannelTensor& dy,
                            const LowMemConvConfig& cfg) {
  if (ctx.r() != cfg.r || ctx.c_in() != cfg.weights.c_in ||
      !(ctx.sparsity() == cfg.sparsity))
    throw context_error("backward_weights: config drifted since forward");
  if (!(dy.shape() == ctx.shape()) || dy.batch() != ctx.batch())
    throw dimension_error("backward_weights: dy dims do not match context");

  const KernelOffsetMap& offsets = cfg.weights.offsets;
  const int pixels = ctx.shape().pixels();
  const int batch = ctx.batch();
  const int c_out = dy.channels();
  const int c_in = ctx.c_in();
  const int nw = offsets.count();

  const ProbeMatrix z = draw_probes(cfg, ctx.shape(), ctx.seed());

  std::vector<std::vector<int>> maps;
  maps.reserve(size_t(nw));
  for (int i = 0; i < nw; ++i)
    maps.push_back(shift_index_map(ctx.shape(), offsets.offset(i)));

  WeightGrad g(c_out, c_in, nw);
  std::vector<double> l_row(size_t(c_out) * pixels);  // L_j, c_out x N
  std::vector<double> shifted(static_cast<size_t>(pixels));

  for (int j = 0; j < z.probes(); ++j) {
    // L_j[m][p] = sum_b xbar[j,b] * dy[m][p,b]
    const auto xb = ctx.xbar_row(j);
    for (int m = 0; m < c_out; ++m) {
      double* lm = l_row.data() + size_t(m) * pixels;
      for (int p = 0; p < pixels; ++p) {
        const auto dr = dy.row(m, p);
        double acc = 0.0;
        for (int b = 0; b < batch; ++b) acc += xb[b] * dr[b];
        lm[p] = acc;
      }
    }
    for (int n = 0; n < c_in; ++n) {
      if (!z.active(n, j)) continue;
      const auto zb = z.block(n, j);
      for (int i = 0; i < nw; ++i) {
        const auto& map = maps[size_t(i)];
        // shifted = probe block moved by offset(i); pairing it with L_j
        // realizes the shifted-trace contraction on the cheap side.
        for (int p = 0; p < pixels; ++p) shifted[size_t(map[size_t(p)])] = zb[size_t(p)];
        for (int m = 0; m < c_out; ++m) {
          const double* lm = l_row.data() + size_t(m) * pixels;
          double dot = 0.0;
          for (int p = 0; p < pixels; ++p) dot += shifted[size_t(p)] * lm[p];
          g.at(m, n, i) += dot;
        }
      }
    }
  }

  for (int n = 0; n < c_in; ++n) {
    const double scale = 1.0 / z.nnz(n);
    for (int m = 0; m < c_out; ++m)
      for (int i = 0; i < nw; ++i) g.at(m, n, i) *= scale;
  }
  return g;
}

ChannelTensor backward_input(const ChannelTensor& dy,
                             const LowMemConvConfig& cfg) {
  return grad_input_exact(dy, cfg.weights);
}

FootprintReport memory_footprint(int pixels, int c_in, int r, int batch) {
  if (pixels < 1 || c_in < 1 || r < 1 || batch < 1)
    throw domain_error("memory_footprint: all dims must be >= 1");
  FootprintReport f;
  f.stored_scalars = std::size_t(r) * batch;
  f.exact_scalars = std::size_t(pixels) * c_in * batch;
  f.reduction_factor = double(pixels) * c_in / double(r);
  return f;
}

WeightGrad probed_grad_indep(const ChannelTensor& x, const ChannelTensor& dy,
                             const KernelOffsetMap& offsets, int r,
                             ProbeSeed seed) {
  if (!(x.shape() == dy.shape()) || x.batch() != dy.batch())
    throw dimension_error("probed_grad_indep: x and dy dims differ");
  if (r < 1) throw domain_error("probed_grad_indep: r must be >= 1");

  const int pixels = x.pixels();
  const int batch = x.batch();
  const int c_in = x.channels();
  const int c_out = dy.channels();
  const int nw = offsets.count();

  std::vector<std::vector<int>> maps;
  maps.reserve(size_t(nw));
  for (int i = 0; i < nw; ++i)
    maps.push_back(shift_index_map(x.shape(), offsets.offset(i)));

  WeightGrad g(c_out, c_in, nw);
  std::vector<double> xb(static_cast<size_t>(batch));
  std::vector<double> l_row(static_cast<size_t>(pixels));
  std::vector<double> shifted(static_cast<size_t>(pixels));

  for (int m = 0; m < c_out; ++m) {
    for (int n = 0; n < c_in; ++n) {
      const ProbeSeed pair_seed =
          seed.child(std::uint64_t(m) * std::uint64_t(c_in) + std::uint64_t(n));
      const ProbeMatrix z = gen_gaussian(pixels, 1, r, pair_seed);
      for (int j = 0; j < r; ++j) {
        const auto zj = z.probe(j);
        for (int b = 0; b < batch; ++b) xb[size_t(b)] = 0.0;
        for (int p = 0; p < pixels; ++p) {
          const auto xr = x.row(n, p);
          for (int b = 0; b < batch; ++b) xb[size_t(b)] += zj[size_t(p)] * xr[b];
        }
        for (int p = 0; p < pixels; ++p) {
          const auto dr = dy.row(m, p);
          double acc = 0.0;
          for (int b = 0; b < batch; ++b) acc += xb[size_t(b)] * dr[b];
          l_row[size_t(p)] = acc;
        }
        for (int i = 0; i < nw; ++i) {
          const auto& map = maps[size_t(i)];
          for (int p = 0; p < pixels; ++p)
            shifted[size_t(map[size_t(p)])] = zj[size_t(p)];
          double dot = 0.0;
          for (int p = 0; p < pixels; ++p) dot += shifted[size_t(p)] * l_row[size_t(p)];
          g.at(m, n, i) += dot;
        }
      }
    }
  }

  const double scale = 1.0 / r;
  for (double& v : g.v) v *= scale;
  return g;
}

}  // namespace probeconv
