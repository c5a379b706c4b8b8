#pragma once

// Independent test oracles. Everything here recomputes results through a
// different route than the library (dense matrices, finite differences,
// straight-line transcriptions) and stays free of the production code paths
// it checks.

#include <cmath>
#include <vector>

#include "probeconv/conv.hpp"
#include "probeconv/image.hpp"
#include "probeconv/matrix.hpp"
#include "probeconv/probing.hpp"
#include "probeconv/tensor.hpp"

namespace oracles {

using namespace probeconv;

// Dense realization of the forward convolution: Y = (sum_i w_i P(k_i)) X per
// channel pair, built from dense_shift_matrix.
inline ChannelTensor dense_conv_forward(const ChannelTensor& x,
                                        const ConvWeights& w) {
  ChannelTensor y(x.shape(), w.c_out, x.batch());
  for (int m = 0; m < w.c_out; ++m) {
    for (int n = 0; n < w.c_in; ++n) {
      Matrix op(x.pixels(), x.pixels());
      for (int i = 0; i < w.offsets.count(); ++i) {
        const Matrix p = dense_shift_matrix(x.shape(), w.offsets.offset(i));
        for (int a = 0; a < x.pixels(); ++a)
          for (int b = 0; b < x.pixels(); ++b)
            op(a, b) += w.at(m, n, i) * p(a, b);
      }
      for (int b = 0; b < x.batch(); ++b) {
        std::vector<double> col(static_cast<size_t>(x.pixels()));
        for (int p = 0; p < x.pixels(); ++p) col[size_t(p)] = x.at(n, p, b);
        std::vector<double> out(static_cast<size_t>(x.pixels()));
        matvec(op, col, out);
        for (int p = 0; p < x.pixels(); ++p) y.at(m, p, b) += out[size_t(p)];
      }
    }
  }
  return y;
}

// Weight gradient through the dense trace identity dw_i = tr(X dY^T P(k_i)).
inline WeightGrad dense_trace_grad(const ChannelTensor& x,
                                   const ChannelTensor& dy,
                                   const KernelOffsetMap& offsets) {
  WeightGrad g(dy.channels(), x.channels(), offsets.count());
  for (int m = 0; m < dy.channels(); ++m) {
    for (int n = 0; n < x.channels(); ++n) {
      Matrix outer(x.pixels(), x.pixels());  // X dY^T
      for (int p = 0; p < x.pixels(); ++p)
        for (int q = 0; q < x.pixels(); ++q) {
          double acc = 0.0;
          for (int b = 0; b < x.batch(); ++b) acc += x.at(n, p, b) * dy.at(m, q, b);
          outer(p, q) = acc;
        }
      for (int i = 0; i < offsets.count(); ++i) {
        const Matrix p = dense_shift_matrix(x.shape(), offsets.offset(i));
        const Matrix prod = matmul(outer, p);
        double tr = 0.0;
        for (int d = 0; d < prod.rows(); ++d) tr += prod(d, d);
        g.at(m, n, i) = tr;
      }
    }
  }
  return g;
}

// Central finite differences of f(w) = 0.5 || conv(x, w) - t ||^2.
inline WeightGrad finite_difference_grad(const ChannelTensor& x,
                                         ConvWeights w,
                                         const ChannelTensor& target,
                                         double step = 1e-5) {
  auto loss = [&](const ConvWeights& weights) {
    const ChannelTensor y = conv_forward(x, weights);
    double acc = 0.0;
    for (int m = 0; m < y.channels(); ++m)
      for (int p = 0; p < y.pixels(); ++p)
        for (int b = 0; b < y.batch(); ++b) {
          const double d = y.at(m, p, b) - target.at(m, p, b);
          acc += d * d;
        }
    return 0.5 * acc;
  };
  WeightGrad g(w.c_out, w.c_in, w.offsets.count());
  for (size_t k = 0; k < w.w.size(); ++k) {
    const double orig = w.w[k];
    w.w[k] = orig + step;
    const double up = loss(w);
    w.w[k] = orig - step;
    const double down = loss(w);
    w.w[k] = orig;
    g.v[k] = (up - down) / (2.0 * step);
  }
  return g;
}

// Straight-line single-channel probed gradient:
//   dw_i = (1/r) sum_j (z_j^T X) (dY^T T z_j)
// with the probe shifted by offset(i) and contractions in ascending index
// order (pixel-major into L, then the shifted dot).
inline WeightGrad straightline_single_channel_probe(const ChannelTensor& x,
                                                    const ChannelTensor& dy,
                                                    const KernelOffsetMap& offsets,
                                                    const ProbeMatrix& z) {
  const int pixels = x.pixels();
  const int batch = x.batch();
  WeightGrad g(1, 1, offsets.count());
  std::vector<double> xb(static_cast<size_t>(batch));
  std::vector<double> l(static_cast<size_t>(pixels));
  std::vector<double> shifted(static_cast<size_t>(pixels));

  for (int j = 0; j < z.probes(); ++j) {
    const auto zj = z.probe(j);
    for (int b = 0; b < batch; ++b) xb[size_t(b)] = 0.0;
    for (int p = 0; p < pixels; ++p)
      for (int b = 0; b < batch; ++b) xb[size_t(b)] += zj[size_t(p)] * x.at(0, p, b);
    for (int p = 0; p < pixels; ++p) {
      double acc = 0.0;
      for (int b = 0; b < batch; ++b) acc += xb[size_t(b)] * dy.at(0, p, b);
      l[size_t(p)] = acc;
    }
    for (int i = 0; i < offsets.count(); ++i) {
      const auto map = shift_index_map(x.shape(), offsets.offset(i));
      for (int p = 0; p < pixels; ++p) shifted[size_t(map[size_t(p)])] = zj[size_t(p)];
      double dot = 0.0;
      for (int p = 0; p < pixels; ++p) dot += shifted[size_t(p)] * l[size_t(p)];
      g.at(0, 0, i) += dot;
    }
  }
  for (double& v : g.v) v *= 1.0 / z.probes();
  return g;
}

// Power iteration on A^T A for the spectral norm.
inline double power_iteration_spectral(const Matrix& a, int iters = 600) {
  std::vector<double> v(static_cast<size_t>(a.cols()), 1.0);
  std::vector<double> av(static_cast<size_t>(a.rows()));
  std::vector<double> atav(static_cast<size_t>(a.cols()));
  const Matrix at = transpose(a);
  double norm = 0.0;
  for (int it = 0; it < iters; ++it) {
    matvec(a, v, av);
    matvec(at, av, atav);
    norm = 0.0;
    for (double x : atav) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (size_t i = 0; i < v.size(); ++i) v[i] = atav[i] / norm;
  }
  matvec(a, v, av);
  double num = 0.0;
  for (double x : av) num += x * x;
  return std::sqrt(num);
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / denom;
}

inline double max_rel_err(std::span<const double> got, std::span<const double> want) {
  double scale = 0.0;
  for (double w : want) scale = std::max(scale, std::abs(w));
  if (scale == 0.0) scale = 1.0;
  double worst = 0.0;
  for (size_t i = 0; i < got.size(); ++i)
    worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  return worst;
}

}  // namespace oracles
