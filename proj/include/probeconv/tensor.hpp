#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "probeconv/errors.hpp"
#include "probeconv/image.hpp"
#include "probeconv/rng.hpp"

namespace probeconv {

/// Batch of multi-channel flattened images, logical shape (C, N, B) in 64-bit
/// precision. Storage is channel-major with the batch fastest:
/// value(c, p, b) lives at data[(c*N + p)*B + b], so one (channel, pixel) row
/// is a contiguous batch vector and the stacked (N*C)-row view used by the
/// probing code is just the natural layout.
class ChannelTensor {
 public:
  ChannelTensor() = default;

  ChannelTensor(ImageShape shape, int channels, int batch)
      : shape_(shape), channels_(channels), batch_(batch),
        values_(size_t(shape.pixels()) * channels * batch, 0.0) {
    shape.validate();
    if (channels <= 0 || batch <= 0)
      throw dimension_error("ChannelTensor: channels and batch must be positive");
  }

  ImageShape shape() const { return shape_; }
  int pixels() const { return shape_.pixels(); }
  int channels() const { return channels_; }
  int batch() const { return batch_; }
  std::size_t size() const { return values_.size(); }

  double& at(int c, int p, int b) { return values_[offset(c, p, b)]; }
  double at(int c, int p, int b) const { return values_[offset(c, p, b)]; }

  /// Contiguous batch row for one (channel, pixel).
  std::span<double> row(int c, int p) {
    return {values_.data() + offset(c, p, 0), size_t(batch_)};
  }
  std::span<const double> row(int c, int p) const {
    return {values_.data() + offset(c, p, 0), size_t(batch_)};
  }

  /// N*B block of one channel.
  std::span<double> channel(int c) {
    return {values_.data() + size_t(c) * pixels() * batch_, size_t(pixels()) * batch_};
  }
  std::span<const double> channel(int c) const {
    return {values_.data() + size_t(c) * pixels() * batch_, size_t(pixels()) * batch_};
  }

  /// Whole buffer viewed as the stacked (N*C_in) x B matrix, row s = c*N + p.
  std::span<double> stacked() { return values_; }
  std::span<const double> stacked() const { return values_; }

  bool same_dims(const ChannelTensor& o) const {
    return shape_ == o.shape_ && channels_ == o.channels_ && batch_ == o.batch_;
  }

  void fill(double v) { values_.assign(values_.size(), v); }

  void require_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) throw domain_error("ChannelTensor: non-finite value");
  }

  static ChannelTensor random_normal(ImageShape shape, int channels, int batch,
                                     CounterRng& rng) {
    ChannelTensor t(shape, channels, batch);
    for (double& v : t.values_) v = rng.normal();
    return t;
  }

  friend bool operator==(const ChannelTensor&, const ChannelTensor&) = default;

 private:
  std::size_t offset(int c, int p, int b) const {
    return (size_t(c) * pixels() + p) * batch_ + b;
  }

  ImageShape shape_;
  int channels_ = 0;
  int batch_ = 0;
  std::vector<double> values_;
};

}  // namespace probeconv
