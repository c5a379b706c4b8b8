#pragma once

#include <vector>

#include "probeconv/errors.hpp"
#include "probeconv/rng.hpp"
#include "probeconv/tensor.hpp"

namespace probeconv {

/// Bijection between weight index i and 2-D shift offset for an odd K x K
/// kernel. Enumeration order is fixed: dy runs -K/2..K/2 in the outer loop,
/// dx in the inner, both ascending. Gradients serialized under this order are
/// comparable across runs and implementations.
class KernelOffsetMap {
 public:
  explicit KernelOffsetMap(int k) : k_(k) {
    if (k <= 0 || k % 2 == 0)
      throw dimension_error("KernelOffsetMap: kernel size must be odd and positive");
    const int h = k / 2;
    offsets_.reserve(size_t(k) * k);
    for (int dy = -h; dy <= h; ++dy)
      for (int dx = -h; dx <= h; ++dx) offsets_.push_back({dy, dx});
  }

  int kernel() const { return k_; }
  int count() const { return int(offsets_.size()); }  // n_w = K*K
  ShiftOffset offset(int i) const { return offsets_[size_t(i)]; }
  const std::vector<ShiftOffset>& offsets() const { return offsets_; }

  int index(ShiftOffset o) const {
    const int h = k_ / 2;
    if (o.dy < -h || o.dy > h || o.dx < -h || o.dx > h)
      throw dimension_error("KernelOffsetMap: offset outside kernel window");
    return (o.dy + h) * k_ + (o.dx + h);
  }

  friend bool operator==(const KernelOffsetMap& a, const KernelOffsetMap& b) {
    return a.k_ == b.k_;
  }

 private:
  int k_;
  std::vector<ShiftOffset> offsets_;
};

/// Convolution weights, logical shape (c_out, c_in, n_w):
/// w[(m*c_in + n)*n_w + i] is the weight between input channel n and output
/// channel m at shift offset(i).
struct ConvWeights {
  int c_in = 0;
  int c_out = 0;
  KernelOffsetMap offsets;
  std::vector<double> w;

  ConvWeights(int c_in_, int c_out_, int kernel)
      : c_in(c_in_), c_out(c_out_), offsets(kernel),
        w(size_t(c_in_) * c_out_ * offsets.count(), 0.0) {
    if (c_in_ <= 0 || c_out_ <= 0)
      throw dimension_error("ConvWeights: channel counts must be positive");
  }

  double& at(int m, int n, int i) {
    return w[(size_t(m) * c_in + n) * offsets.count() + i];
  }
  double at(int m, int n, int i) const {
    return w[(size_t(m) * c_in + n) * offsets.count() + i];
  }
};

/// Weight gradient; same logical shape and indexing as ConvWeights::w.
struct WeightGrad {
  int c_in = 0;
  int c_out = 0;
  int n_w = 0;
  std::vector<double> v;

  WeightGrad() = default;
  WeightGrad(int c_out_, int c_in_, int n_w_)
      : c_in(c_in_), c_out(c_out_), n_w(n_w_),
        v(size_t(c_in_) * c_out_ * n_w_, 0.0) {}

  double& at(int m, int n, int i) { return v[(size_t(m) * c_in + n) * n_w + i]; }
  double at(int m, int n, int i) const { return v[(size_t(m) * c_in + n) * n_w + i]; }
};

/// Y^m = sum_n sum_i w_i^{n,m} * (shift by offset(i))(X^n), per batch column.
/// Circular boundary; output geometry equals input geometry.
ChannelTensor conv_forward(const ChannelTensor& x, const ConvWeights& w);

/// Exact weight gradient: dw_i^{n,m} = <X^n, circular_shift(dY^m, -k(i))>,
/// summed over pixels and batch. Never materializes the N x N outer product.
WeightGrad grad_weights_exact(const ChannelTensor& x, const ChannelTensor& dy,
                              const KernelOffsetMap& offsets);

/// Adjoint of conv_forward in its input:
/// <conv_forward(x,w), dy> == <x, grad_input_exact(dy,w)>.
ChannelTensor grad_input_exact(const ChannelTensor& dy, const ConvWeights& w);

}  // namespace probeconv
