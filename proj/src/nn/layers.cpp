#include "probeconv/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "probeconv/errors.hpp"

namespace probeconv::nn {

const char* grad_mode_name(GradMode m) {
  switch (m) {
    case GradMode::exact: return "exact";
    case GradMode::indep: return "indep";
    case GradMode::multi: return "multi";
    case GradMode::multi_ortho: return "multi-ortho";
  }
  return "?";
}

GradMode grad_mode_from_name(const std::string& s) {
  if (s == "exact") return GradMode::exact;
  if (s == "indep") return GradMode::indep;
  if (s == "multi") return GradMode::multi;
  if (s == "multi-ortho" || s == "multi_ortho") return GradMode::multi_ortho;
  throw spec_error("unknown gradient mode: " + s);
}

// ---------------------------------------------------------------- ConvLayer

ConvLayer::ConvLayer(int kernel, int c_out, bool probed, int r,
                     std::string sparsity, bool with_bias)
    : kernel_(kernel), c_out_(c_out), probed_(probed), r_(r),
      sparsity_spec_(std::move(sparsity)), with_bias_(with_bias) {}

std::string ConvLayer::name() const {
  return probed_ ? "conv[probed]" : "conv";
}

Shape3 ConvLayer::bind(const Shape3& in) {
  in_shape_ = in;
  LayerSpec tmp;
  tmp.kind = LayerSpec::Kind::conv;
  tmp.sparsity = sparsity_spec_;
  const BlockSparsity sp = probed_ ? tmp.resolve_sparsity(in.channels)
                                   : BlockSparsity::dense(in.channels);
  cfg_.emplace(probed_ ? r_ : 1, sp, ConvWeights(in.channels, c_out_, kernel_));
  bias_.assign(size_t(c_out_), 0.0);
  bias_grad_.assign(size_t(c_out_), 0.0);
  wgrad_ = WeightGrad(c_out_, in.channels, cfg_->weights.offsets.count());
  return {c_out_, in.image};
}

void ConvLayer::init_params(CounterRng& rng) {
  const int nw = cfg_->weights.offsets.count();
  const double fan_in = double(in_shape_.channels) * nw;
  const double fan_out = double(c_out_) * nw;
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : cfg_->weights.w) v = rng.uniform(-limit, limit);
  for (double& v : bias_) v = 0.0;
}

void ConvLayer::collect_params(std::vector<ParamSlot>& out) {
  out.push_back({&cfg_->weights.w, &wgrad_.v});
  if (with_bias_) out.push_back({&bias_, &bias_grad_});
}

ChannelTensor ConvLayer::forward(const ChannelTensor& x, const StepContext& ctx) {
  stored_x_.reset();
  stored_ctx_.reset();

  ChannelTensor y = [&] {
    if (use_probes(ctx) && ctx.mode != GradMode::indep) {
      const BlockSparsity sp = ctx.mode == GradMode::multi
                                   ? BlockSparsity::dense(in_shape_.channels)
                                   : cfg_->sparsity;
      LowMemConvConfig step_cfg(r_, sp, cfg_->weights);
      auto [out, compressed] =
          forward_compressed(x, step_cfg, ctx.probe_seed(index_));
      if (ctx.training) stored_ctx_.emplace(std::move(compressed));
      return std::move(out);
    }
    if (ctx.training) stored_x_ = x;
    return conv_forward(x, cfg_->weights);
  }();

  if (with_bias_) {
    for (int m = 0; m < c_out_; ++m) {
      const double bm = bias_[size_t(m)];
      auto span = y.channel(m);
      for (double& v : span) v += bm;
    }
  }
  return y;
}

ChannelTensor ConvLayer::backward(const ChannelTensor& dy, const StepContext& ctx) {
  // Bias gradient is exact in every mode; it needs no stored activation.
  if (with_bias_) {
    for (int m = 0; m < c_out_; ++m) {
      double acc = 0.0;
      for (double v : dy.channel(m)) acc += v;
      bias_grad_[size_t(m)] = acc;
    }
  }

  if (stored_ctx_) {
    const BlockSparsity sp = ctx.mode == GradMode::multi
                                 ? BlockSparsity::dense(in_shape_.channels)
                                 : cfg_->sparsity;
    LowMemConvConfig step_cfg(r_, sp, cfg_->weights);
    wgrad_ = backward_weights(*stored_ctx_, dy, step_cfg);
  } else if (stored_x_) {
    if (ctx.mode == GradMode::indep && probed_) {
      wgrad_ = probed_grad_indep(*stored_x_, dy, cfg_->weights.offsets, r_,
                                 ctx.probe_seed(index_));
    } else {
      wgrad_ = grad_weights_exact(*stored_x_, dy, cfg_->weights.offsets);
    }
  } else {
    throw context_error("ConvLayer: backward without a stored forward");
  }

  return grad_input_exact(dy, cfg_->weights);
}

std::size_t ConvLayer::stored_activation_scalars() const {
  if (stored_ctx_) return stored_ctx_->stored_scalars();
  if (stored_x_) return stored_x_->size();
  return 0;
}

// ---------------------------------------------------------------- ReluLayer

Shape3 ReluLayer::bind(const Shape3& in) { return in; }

ChannelTensor ReluLayer::forward(const ChannelTensor& x, const StepContext& ctx) {
  ChannelTensor y = x;
  numel_ = x.size();
  if (ctx.training) signs_.assign((numel_ + 63) / 64, 0);
  auto data = y.stacked();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] > 0.0) {
      if (ctx.training) signs_[i >> 6] |= (std::uint64_t{1} << (i & 63));
    } else {
      data[i] = 0.0;
    }
  }
  return y;
}

ChannelTensor ReluLayer::backward(const ChannelTensor& dy, const StepContext&) {
  if (dy.size() != numel_) throw dimension_error("relu backward: size mismatch");
  ChannelTensor dx = dy;
  auto data = dx.stacked();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!(signs_[i >> 6] >> (i & 63) & 1)) data[i] = 0.0;
  return dx;
}

// ---------------------------------------------------------------- PoolLayer

Shape3 PoolLayer::bind(const Shape3& in) {
  in_shape_ = in;
  const int h = in.image.height / size_;
  const int w = in.image.width / size_;
  if (h < 1 || w < 1) throw spec_error("pool collapses the image");
  out_shape_ = {in.channels, {h, w}};
  return out_shape_;
}

ChannelTensor PoolLayer::forward(const ChannelTensor& x, const StepContext& ctx) {
  ChannelTensor y(out_shape_.image, out_shape_.channels, x.batch());
  const int k = size_;
  const int in_w = in_shape_.image.width;
  const int batch = x.batch();
  if (is_max_ && ctx.training)
    argmax_.assign(size_t(out_shape_.numel()) * batch, 0);

  for (int c = 0; c < out_shape_.channels; ++c) {
    for (int oh = 0; oh < out_shape_.image.height; ++oh) {
      for (int ow = 0; ow < out_shape_.image.width; ++ow) {
        const int op = out_shape_.image.index(oh, ow);
        auto out_row = y.row(c, op);
        for (int b = 0; b < batch; ++b) {
          if (is_max_) {
            double best = -std::numeric_limits<double>::infinity();
            int best_p = 0;
            for (int dy_ = 0; dy_ < k; ++dy_)
              for (int dx_ = 0; dx_ < k; ++dx_) {
                const int p = (oh * k + dy_) * in_w + (ow * k + dx_);
                const double v = x.at(c, p, b);
                if (v > best) {
                  best = v;
                  best_p = p;
                }
              }
            out_row[b] = best;
            if (ctx.training)
              argmax_[(size_t(c) * out_shape_.image.pixels() + op) * batch + b] =
                  std::uint32_t(best_p);
          } else {
            double acc = 0.0;
            for (int dy_ = 0; dy_ < k; ++dy_)
              for (int dx_ = 0; dx_ < k; ++dx_)
                acc += x.at(c, (oh * k + dy_) * in_w + (ow * k + dx_), b);
            out_row[b] = acc / double(k * k);
          }
        }
      }
    }
  }
  return y;
}

ChannelTensor PoolLayer::backward(const ChannelTensor& dy, const StepContext&) {
  ChannelTensor dx(in_shape_.image, in_shape_.channels, dy.batch());
  const int k = size_;
  const int in_w = in_shape_.image.width;
  const int batch = dy.batch();
  for (int c = 0; c < out_shape_.channels; ++c) {
    for (int op = 0; op < out_shape_.image.pixels(); ++op) {
      const auto g = dy.row(c, op);
      if (is_max_) {
        for (int b = 0; b < batch; ++b) {
          const std::uint32_t p =
              argmax_[(size_t(c) * out_shape_.image.pixels() + op) * batch + b];
          dx.at(c, int(p), b) += g[b];
        }
      } else {
        const int oh = op / out_shape_.image.width;
        const int ow = op % out_shape_.image.width;
        const double scale = 1.0 / double(k * k);
        for (int dy_ = 0; dy_ < k; ++dy_)
          for (int dx_ = 0; dx_ < k; ++dx_) {
            const int p = (oh * k + dy_) * in_w + (ow * k + dx_);
            auto row = dx.row(c, p);
            for (int b = 0; b < batch; ++b) row[b] += g[b] * scale;
          }
      }
    }
  }
  return dx;
}

// ------------------------------------------------------------- FlattenLayer

Shape3 FlattenLayer::bind(const Shape3& in) {
  in_shape_ = in;
  return {1, {1, in.numel()}};
}

ChannelTensor FlattenLayer::forward(const ChannelTensor& x, const StepContext&) {
  // Layout (c*N + p)*B + b is already the flat stacked order.
  ChannelTensor y({1, in_shape_.numel()}, 1, x.batch());
  std::copy(x.stacked().begin(), x.stacked().end(), y.stacked().begin());
  return y;
}

ChannelTensor FlattenLayer::backward(const ChannelTensor& dy, const StepContext&) {
  ChannelTensor dx(in_shape_.image, in_shape_.channels, dy.batch());
  std::copy(dy.stacked().begin(), dy.stacked().end(), dx.stacked().begin());
  return dx;
}

// --------------------------------------------------------------- DenseLayer

Shape3 DenseLayer::bind(const Shape3& in) {
  if (in.channels != 1 || in.image.height != 1)
    throw spec_error("dense requires a flat input (use flatten)");
  in_ = in.image.width;
  w_.assign(size_t(out_) * in_, 0.0);
  b_.assign(size_t(out_), 0.0);
  wg_.assign(w_.size(), 0.0);
  bg_.assign(b_.size(), 0.0);
  return {1, {1, out_}};
}

void DenseLayer::init_params(CounterRng& rng) {
  const double limit = std::sqrt(6.0 / (double(in_) + double(out_)));
  for (double& v : w_) v = rng.uniform(-limit, limit);
  for (double& v : b_) v = 0.0;
}

void DenseLayer::collect_params(std::vector<ParamSlot>& out) {
  out.push_back({&w_, &wg_});
  out.push_back({&b_, &bg_});
}

ChannelTensor DenseLayer::forward(const ChannelTensor& x, const StepContext& ctx) {
  const int batch = x.batch();
  ChannelTensor y({1, out_}, 1, batch);
  for (int o = 0; o < out_; ++o) {
    const double* wr = w_.data() + size_t(o) * in_;
    auto yr = y.row(0, o);
    for (int b = 0; b < batch; ++b) yr[b] = b_[size_t(o)];
    for (int s = 0; s < in_; ++s) {
      const double ws = wr[s];
      if (ws == 0.0) continue;
      const auto xr = x.row(0, s);
      for (int b = 0; b < batch; ++b) yr[b] += ws * xr[b];
    }
  }
  stored_x_.reset();
  if (ctx.training) stored_x_ = x;
  return y;
}

ChannelTensor DenseLayer::backward(const ChannelTensor& dy, const StepContext&) {
  if (!stored_x_) throw context_error("DenseLayer: backward without forward");
  const ChannelTensor& x = *stored_x_;
  const int batch = dy.batch();

  for (int o = 0; o < out_; ++o) {
    const auto g = dy.row(0, o);
    double* wg = wg_.data() + size_t(o) * in_;
    for (int s = 0; s < in_; ++s) {
      const auto xr = x.row(0, s);
      double acc = 0.0;
      for (int b = 0; b < batch; ++b) acc += g[b] * xr[b];
      wg[s] = acc;
    }
    double acc = 0.0;
    for (int b = 0; b < batch; ++b) acc += g[b];
    bg_[size_t(o)] = acc;
  }

  ChannelTensor dx({1, in_}, 1, batch);
  for (int o = 0; o < out_; ++o) {
    const auto g = dy.row(0, o);
    const double* wr = w_.data() + size_t(o) * in_;
    for (int s = 0; s < in_; ++s) {
      const double ws = wr[s];
      if (ws == 0.0) continue;
      auto dr = dx.row(0, s);
      for (int b = 0; b < batch; ++b) dr[b] += ws * g[b];
    }
  }
  return dx;
}

// ---------------------------------------------------------- LogSoftmaxLayer

Shape3 LogSoftmaxLayer::bind(const Shape3& in) {
  if (in.channels != 1 || in.image.height != 1)
    throw spec_error("log_softmax requires a flat input");
  return in;
}

ChannelTensor LogSoftmaxLayer::forward(const ChannelTensor& x, const StepContext& ctx) {
  ChannelTensor y = x;
  const int classes = x.pixels();
  const int batch = x.batch();
  for (int b = 0; b < batch; ++b) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < classes; ++i) mx = std::max(mx, y.at(0, i, b));
    double sum = 0.0;
    for (int i = 0; i < classes; ++i) sum += std::exp(y.at(0, i, b) - mx);
    const double lse = mx + std::log(sum);
    for (int i = 0; i < classes; ++i) y.at(0, i, b) -= lse;
  }
  stored_y_.reset();
  if (ctx.training) stored_y_ = y;
  return y;
}

ChannelTensor LogSoftmaxLayer::backward(const ChannelTensor& dy, const StepContext&) {
  if (!stored_y_) throw context_error("LogSoftmaxLayer: backward without forward");
  const ChannelTensor& y = *stored_y_;
  ChannelTensor dx = dy;
  const int classes = dy.pixels();
  const int batch = dy.batch();
  for (int b = 0; b < batch; ++b) {
    double total = 0.0;
    for (int i = 0; i < classes; ++i) total += dy.at(0, i, b);
    for (int i = 0; i < classes; ++i)
      dx.at(0, i, b) -= std::exp(y.at(0, i, b)) * total;
  }
  return dx;
}

// -------------------------------------------------------------- DropoutLayer

Shape3 DropoutLayer::bind(const Shape3& in) { return in; }

ChannelTensor DropoutLayer::forward(const ChannelTensor& x, const StepContext& ctx) {
  if (!ctx.training) return x;
  ChannelTensor y = x;
  numel_ = x.size();
  mask_.assign((numel_ + 63) / 64, 0);
  CounterRng rng(ctx.dropout_seed(index_));
  const double keep = 1.0 - p_;
  const double scale = 1.0 / keep;
  auto data = y.stacked();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (rng.next_double() < keep) {
      mask_[i >> 6] |= (std::uint64_t{1} << (i & 63));
      data[i] *= scale;
    } else {
      data[i] = 0.0;
    }
  }
  return y;
}

ChannelTensor DropoutLayer::backward(const ChannelTensor& dy, const StepContext&) {
  ChannelTensor dx = dy;
  const double scale = 1.0 / (1.0 - p_);
  auto data = dx.stacked();
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = (mask_[i >> 6] >> (i & 63) & 1) ? data[i] * scale : 0.0;
  return dx;
}

// ------------------------------------------------------------------ factory

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  using K = LayerSpec::Kind;
  switch (spec.kind) {
    case K::conv:
      return std::make_unique<ConvLayer>(spec.kernel, spec.c_out, spec.probed,
                                         spec.r, spec.sparsity, spec.bias);
    case K::relu: return std::make_unique<ReluLayer>();
    case K::maxpool: return std::make_unique<PoolLayer>(spec.pool, true);
    case K::avgpool: return std::make_unique<PoolLayer>(spec.pool, false);
    case K::flatten: return std::make_unique<FlattenLayer>();
    case K::dense: return std::make_unique<DenseLayer>(spec.out);
    case K::log_softmax: return std::make_unique<LogSoftmaxLayer>();
    case K::dropout: return std::make_unique<DropoutLayer>(spec.p);
  }
  throw spec_error("unhandled layer kind");
}

}  // namespace probeconv::nn
