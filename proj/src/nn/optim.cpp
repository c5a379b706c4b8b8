#include "probeconv/nn/optim.hpp"

#include <cmath>

#include "probeconv/errors.hpp"

namespace probeconv::nn {

void Sgd::step(std::span<ParamSlot> params, double lr_scale) {
  const double lr = lr_ * lr_scale;
  for (const auto& slot : params) {
    auto& w = *slot.values;
    const auto& g = *slot.grads;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  }
}

void Adam::step(std::span<ParamSlot> params, double lr_scale) {
  if (m_.empty()) {
    for (const auto& slot : params) {
      m_.emplace_back(slot.values->size(), 0.0);
      v_.emplace_back(slot.values->size(), 0.0);
    }
  }
  if (m_.size() != params.size())
    throw dimension_error("Adam: parameter set changed between steps");

  ++t_;
  const double lr = lr_ * lr_scale;
  const double bc1 = 1.0 - std::pow(beta1_, double(t_));
  const double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t s = 0; s < params.size(); ++s) {
    auto& w = *params[s].values;
    const auto& g = *params[s].grads;
    auto& m = m_[s];
    auto& v = v_[s];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& cfg) {
  if (cfg.lr <= 0.0) throw domain_error("optimizer: lr must be positive");
  switch (cfg.kind) {
    case OptimizerConfig::Kind::sgd: return std::make_unique<Sgd>(cfg.lr);
    case OptimizerConfig::Kind::adam:
      return std::make_unique<Adam>(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  }
  throw domain_error("optimizer: unknown kind");
}

}  // namespace probeconv::nn
