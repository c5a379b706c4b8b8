#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "probeconv/image.hpp"
#include "probeconv/tensor.hpp"

namespace probeconv::nn {

/// In-memory image classification dataset. Pixels are stored sample-major in
/// (channel, pixel) order, normalized to [0, 1].
struct Dataset {
  ImageShape shape;
  int channels = 1;
  std::vector<float> pixels;
  std::vector<int> labels;

  int count() const { return int(labels.size()); }
  int sample_values() const { return channels * shape.pixels(); }
  std::span<const float> sample(int i) const {
    return {pixels.data() + std::size_t(i) * sample_values(),
            std::size_t(sample_values())};
  }
};

/// IDX readers (magic 0x00000803 for images, 0x00000801 for labels, big-endian
/// dimensions). limit = 0 loads everything.
Dataset load_mnist_idx(const std::filesystem::path& images,
                       const std::filesystem::path& labels, int limit = 0);

/// CIFAR-10 binary batches: records of 1 label byte + 3072 channel-major
/// pixel bytes (3 x 32 x 32).
Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& batches,
                            int limit = 0);

/// Two linearly separable classes: class-dependent bright half plus Gaussian
/// noise, clipped to [0, 1]. Deterministic in seed.
Dataset synthetic_separable(int count, ImageShape shape, double noise,
                            std::uint64_t seed);

/// Assembles a batch tensor from dataset rows (64-bit values).
ChannelTensor make_batch(const Dataset& data, std::span<const int> indices);
std::vector<int> batch_labels(const Dataset& data, std::span<const int> indices);

}  // namespace probeconv::nn
