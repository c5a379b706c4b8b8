#include "probeconv/nn/network.hpp"

#include <cmath>

#include "probeconv/errors.hpp"

namespace probeconv::nn {

Network Network::build(const NetworkSpec& spec, std::uint64_t init_seed) {
  if (spec.shape_table)
    throw spec_error("shape-table specs are audit-only and cannot be built");
  Network net;
  net.spec_ = spec;
  Shape3 cur = spec.input;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    auto layer = make_layer(spec.layers[i]);
    layer->set_index(int(i));
    cur = layer->bind(cur);
    CounterRng rng(init_seed, derive_stream(0x696e6974ULL, std::uint64_t(i)));
    layer->init_params(rng);
    net.layers_.push_back(std::move(layer));
  }
  net.output_shape_ = cur;
  return net;
}

ChannelTensor Network::forward(const ChannelTensor& x, const StepContext& ctx) {
  if (x.channels() != spec_.input.channels || !(x.shape() == spec_.input.image))
    throw dimension_error("Network::forward: input shape mismatch");
  ChannelTensor cur = x;
  for (auto& layer : layers_) cur = layer->forward(cur, ctx);
  return cur;
}

void Network::backward(const ChannelTensor& dloss, const StepContext& ctx) {
  ChannelTensor cur = dloss;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    cur = (*it)->backward(cur, ctx);
}

std::vector<ParamSlot> Network::params() {
  std::vector<ParamSlot> out;
  for (auto& layer : layers_) layer->collect_params(out);
  return out;
}

std::vector<Layer*> Network::layers() {
  std::vector<Layer*> out;
  for (auto& l : layers_) out.push_back(l.get());
  return out;
}

std::vector<ConvLayer*> Network::conv_layers() {
  std::vector<ConvLayer*> out;
  for (auto& l : layers_)
    if (auto* c = dynamic_cast<ConvLayer*>(l.get())) out.push_back(c);
  return out;
}

std::size_t Network::stored_activation_scalars() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l->stored_activation_scalars();
  return total;
}

LossResult nll_loss(const ChannelTensor& logp, std::span<const int> labels) {
  const int classes = logp.pixels();
  const int batch = logp.batch();
  if (int(labels.size()) != batch)
    throw dimension_error("nll_loss: labels size != batch");

  LossResult res;
  res.dlogp = ChannelTensor(logp.shape(), 1, batch);
  const double inv_b = 1.0 / double(batch);
  for (int b = 0; b < batch; ++b) {
    const int y = labels[size_t(b)];
    if (y < 0 || y >= classes) throw domain_error("nll_loss: label out of range");
    res.loss -= logp.at(0, y, b) * inv_b;
    res.dlogp.at(0, y, b) = -inv_b;

    int arg = 0;
    double best = logp.at(0, 0, b);
    for (int i = 1; i < classes; ++i)
      if (logp.at(0, i, b) > best) {
        best = logp.at(0, i, b);
        arg = i;
      }
    res.correct += arg == y ? 1 : 0;
  }
  return res;
}

double loss_and_grad(Network& net, const ChannelTensor& x,
                     std::span<const int> labels, StepContext& ctx,
                     int* correct) {
  if (net.spec().layers.empty() ||
      net.spec().layers.back().kind != LayerSpec::Kind::log_softmax)
    throw spec_error("loss_and_grad: network must end with log_softmax");
  const ChannelTensor logp = net.forward(x, ctx);
  LossResult loss = nll_loss(logp, labels);
  net.backward(loss.dlogp, ctx);
  if (correct) *correct = loss.correct;
  return loss.loss;
}

}  // namespace probeconv::nn
