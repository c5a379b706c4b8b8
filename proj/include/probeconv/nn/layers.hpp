#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "probeconv/lowmem.hpp"
#include "probeconv/nn/spec.hpp"
#include "probeconv/rng.hpp"
#include "probeconv/tensor.hpp"

namespace probeconv::nn {

/// Which weight-gradient estimator the convolution layers use this step.
/// exact: true gradients; indep: per-channel-pair probes; multi: one dense
/// stacked probe set; multi_ortho: block-sparse stacked probes.
enum class GradMode { exact, indep, multi, multi_ortho };

const char* grad_mode_name(GradMode m);
GradMode grad_mode_from_name(const std::string& s);

/// Per-step state threaded through forward/backward. Probe, dropout, and
/// shuffle streams are all derived from (master_seed, iteration, layer), so a
/// whole training run replays from one seed.
struct StepContext {
  std::uint64_t master_seed = 0;
  std::uint64_t iteration = 0;
  GradMode mode = GradMode::exact;
  bool training = true;

  ProbeSeed probe_seed(int layer_index) const {
    return ProbeSeed{master_seed,
                     derive_stream(0x70726f6265ULL, std::uint64_t(layer_index),
                                   iteration)};
  }
  ProbeSeed dropout_seed(int layer_index) const {
    return ProbeSeed{master_seed,
                     derive_stream(0x64726f70ULL, std::uint64_t(layer_index),
                                   iteration)};
  }
};

/// Mutable view of one parameter tensor and its gradient.
struct ParamSlot {
  std::vector<double>* values = nullptr;
  std::vector<double>* grads = nullptr;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  /// Fixes internal dimensions from the input shape; returns the output shape.
  virtual Shape3 bind(const Shape3& in) = 0;
  virtual ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) = 0;
  virtual ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) = 0;
  virtual void collect_params(std::vector<ParamSlot>&) {}
  virtual void init_params(CounterRng&) {}
  /// Scalar-equivalents of activation state currently held for backward.
  virtual std::size_t stored_activation_scalars() const { return 0; }

  void set_index(int i) { index_ = i; }
  int index() const { return index_; }

 protected:
  int index_ = 0;
};

// -----------------------------------------------------------------------------

class ConvLayer final : public Layer {
 public:
  ConvLayer(int kernel, int c_out, bool probed, int r, std::string sparsity,
            bool with_bias);

  std::string name() const override;
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init_params(CounterRng& rng) override;
  std::size_t stored_activation_scalars() const override;

  bool probed() const { return probed_; }
  int probe_count() const { return r_; }
  ConvWeights& weights() { return cfg_->weights; }
  const WeightGrad& weight_grad() const { return wgrad_; }

 private:
  bool use_probes(const StepContext& ctx) const {
    return probed_ && ctx.mode != GradMode::exact;
  }

  int kernel_;
  int c_out_;
  bool probed_;
  int r_;
  std::string sparsity_spec_;
  bool with_bias_;

  Shape3 in_shape_;
  std::optional<LowMemConvConfig> cfg_;  // owns the weights
  std::vector<double> bias_;
  WeightGrad wgrad_;
  std::vector<double> bias_grad_;

  // One of the two is held after forward, never both.
  std::optional<ChannelTensor> stored_x_;
  std::optional<CompressedActivation> stored_ctx_;
};

class ReluLayer final : public Layer {
 public:
  std::string name() const override { return "relu"; }
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;
  std::size_t stored_activation_scalars() const override {
    return signs_.size();  // one 8-byte word per 64 sign bits
  }

 private:
  std::vector<std::uint64_t> signs_;
  std::size_t numel_ = 0;
};

class PoolLayer final : public Layer {
 public:
  PoolLayer(int size, bool is_max) : size_(size), is_max_(is_max) {}
  std::string name() const override { return is_max_ ? "maxpool" : "avgpool"; }
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;
  std::size_t stored_activation_scalars() const override {
    return argmax_.size() / 2;  // 4-byte indices
  }

 private:
  int size_;
  bool is_max_;
  Shape3 in_shape_, out_shape_;
  std::vector<std::uint32_t> argmax_;
};

class FlattenLayer final : public Layer {
 public:
  std::string name() const override { return "flatten"; }
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;

 private:
  Shape3 in_shape_;
};

class DenseLayer final : public Layer {
 public:
  explicit DenseLayer(int out) : out_(out) {}
  std::string name() const override { return "dense"; }
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;
  void collect_params(std::vector<ParamSlot>& out) override;
  void init_params(CounterRng& rng) override;
  std::size_t stored_activation_scalars() const override {
    return stored_x_ ? stored_x_->size() : 0;
  }

 private:
  int out_;
  int in_ = 0;
  std::vector<double> w_, b_, wg_, bg_;
  std::optional<ChannelTensor> stored_x_;
};

class LogSoftmaxLayer final : public Layer {
 public:
  std::string name() const override { return "log_softmax"; }
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;
  std::size_t stored_activation_scalars() const override {
    return stored_y_ ? stored_y_->size() : 0;
  }

 private:
  std::optional<ChannelTensor> stored_y_;
};

class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(double p) : p_(p) {}
  std::string name() const override { return "dropout"; }
  Shape3 bind(const Shape3& in) override;
  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx) override;
  ChannelTensor backward(const ChannelTensor& dy, const StepContext& ctx) override;
  std::size_t stored_activation_scalars() const override { return mask_.size(); }

 private:
  double p_;
  std::vector<std::uint64_t> mask_;
  std::size_t numel_ = 0;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

}  // namespace probeconv::nn
