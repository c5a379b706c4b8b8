#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "probeconv/conv.hpp"
#include "probeconv/probing.hpp"

namespace probeconv {

/// Configuration of a low-memory convolutional layer: probe count, per-channel
/// block sparsity (dense(c_in) gives plain Gaussian probing with 1/r scaling),
/// and the convolution weights.
struct LowMemConvConfig {
  int r = 1;
  BlockSparsity sparsity;
  ConvWeights weights;

  LowMemConvConfig(int r_, BlockSparsity sp, ConvWeights w)
      : r(r_), sparsity(std::move(sp)), weights(std::move(w)) {
    if (r < 1) throw domain_error("LowMemConvConfig: r must be >= 1");
    sparsity.validate(weights.c_in);
  }
};

// =============================================================================
/// Everything the backward pass keeps from the forward input: the probed
/// compression xbar = Z^T X (r x B scalars) plus the seed that regenerates Z.
/// The input tensor itself is never retained.
class CompressedActivation {
 public:
  CompressedActivation(ImageShape shape, int c_in, int r, int batch,
                       BlockSparsity sparsity, ProbeSeed seed)
      : shape_(shape), c_in_(c_in), r_(r), batch_(batch),
        sparsity_(std::move(sparsity)), seed_(seed),
        xbar_(size_t(r) * batch, 0.0) {}

  ImageShape shape() const { return shape_; }
  int c_in() const { return c_in_; }
  int r() const { return r_; }
  int batch() const { return batch_; }
  const BlockSparsity& sparsity() const { return sparsity_; }
  const ProbeSeed& seed() const { return seed_; }

  std::span<double> xbar_row(int j) {
    return {xbar_.data() + size_t(j) * batch_, size_t(batch_)};
  }
  std::span<const double> xbar_row(int j) const {
    return {xbar_.data() + size_t(j) * batch_, size_t(batch_)};
  }
  std::span<const double> xbar() const { return xbar_; }

  /// Accounting contract: exactly r * B scalars of stored state.
  std::size_t stored_scalars() const { return xbar_.size(); }

 private:
  ImageShape shape_;
  int c_in_;
  int r_;
  int batch_;
  BlockSparsity sparsity_;
  ProbeSeed seed_;
  std::vector<double> xbar_;
};

/// Forward pass: exact convolution output (never approximated) plus the
/// compressed activation. The probe matrix is drawn from iter_seed, consumed,
/// and discarded; the backward pass rebuilds it from the seed in the context.
std::pair<ChannelTensor, CompressedActivation> forward_compressed(
    const ChannelTensor& x, const LowMemConvConfig& cfg, ProbeSeed iter_seed);

/// Test hook: same contract with an explicitly supplied probe matrix
/// (e.g. ProbeMatrix::identity for the lossless r = N*C_in limit).
std::pair<ChannelTensor, CompressedActivation> forward_compressed_with_probe(
    const ChannelTensor& x, const LowMemConvConfig& cfg, const ProbeMatrix& z);

/// Backward pass over weights: regenerates Z from the stored seed, forms
/// L_j = dY xbar_j^T one probe at a time, and contracts shifted probe blocks
/// against it. Unbiased estimate of grad_weights_exact; two calls on the same
/// context return bit-identical gradients.
WeightGrad backward_weights(const CompressedActivation& ctx,
                            const ChannelTensor& dy, const LowMemConvConfig& cfg);

/// Input gradient; exact, needs no stored activation.
ChannelTensor backward_input(const ChannelTensor& dy, const LowMemConvConfig& cfg);

struct FootprintReport {
  std::size_t stored_scalars = 0;  // r * B
  std::size_t exact_scalars = 0;   // N * C_in * B
  double reduction_factor = 0.0;   // N * C_in / r
};

FootprintReport memory_footprint(int pixels, int c_in, int r, int batch);

/// Per-pair independent probing: each (input, output) channel pair gets its
/// own r Gaussian probes of length N. Closest to the exact gradient and the
/// costliest; kept for gradient-noise comparisons.
WeightGrad probed_grad_indep(const ChannelTensor& x, const ChannelTensor& dy,
                             const KernelOffsetMap& offsets, int r,
                             ProbeSeed seed);

}  // namespace probeconv
