#pragma once

#include <memory>
#include <vector>

#include "probeconv/nn/layers.hpp"

namespace probeconv::nn {

/// Runnable network built from a NetworkSpec. Forward is identical in every
/// gradient mode (the probed path never approximates outputs); modes differ
/// only in how conv weight gradients are produced during backward.
class Network {
 public:
  static Network build(const NetworkSpec& spec, std::uint64_t init_seed);

  const NetworkSpec& spec() const { return spec_; }
  Shape3 input_shape() const { return spec_.input; }
  Shape3 output_shape() const { return output_shape_; }
  int classes() const { return output_shape_.image.width; }

  ChannelTensor forward(const ChannelTensor& x, const StepContext& ctx);
  /// Backward from the loss gradient at the output; fills parameter grads.
  void backward(const ChannelTensor& dloss, const StepContext& ctx);

  std::vector<ParamSlot> params();
  std::vector<Layer*> layers();
  std::vector<ConvLayer*> conv_layers();

  /// Activation scalars currently held across all layers (accounting API).
  std::size_t stored_activation_scalars() const;

 private:
  NetworkSpec spec_;
  Shape3 output_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Mean cross-entropy of log-probabilities against integer labels, plus the
/// gradient with respect to the log-probs. The network's last layer must be
/// log_softmax.
struct LossResult {
  double loss = 0.0;
  ChannelTensor dlogp;
  int correct = 0;  // argmax matches label
};

LossResult nll_loss(const ChannelTensor& logp, std::span<const int> labels);

/// One full forward/backward pass: returns the batch loss; parameter
/// gradients are left in the layers.
double loss_and_grad(Network& net, const ChannelTensor& x,
                     std::span<const int> labels, StepContext& ctx,
                     int* correct = nullptr);

}  // namespace probeconv::nn
