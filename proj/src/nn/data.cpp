#include "probeconv/nn/data.hpp"

#include <algorithm>
#include <fstream>

#include "probeconv/errors.hpp"
#include "probeconv/rng.hpp"

namespace probeconv::nn {

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw io_error(std::string("idx: truncated ") + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

Dataset load_mnist_idx(const std::filesystem::path& images,
                       const std::filesystem::path& labels, int limit) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw io_error("idx: cannot open " + images.string());
  std::ifstream lab(labels, std::ios::binary);
  if (!lab) throw io_error("idx: cannot open " + labels.string());

  if (read_be32(img, "image magic") != kIdxImagesMagic)
    throw io_error("idx: bad image magic in " + images.string());
  const int n_img = int(read_be32(img, "image count"));
  const int rows = int(read_be32(img, "rows"));
  const int cols = int(read_be32(img, "cols"));

  if (read_be32(lab, "label magic") != kIdxLabelsMagic)
    throw io_error("idx: bad label magic in " + labels.string());
  const int n_lab = int(read_be32(lab, "label count"));
  if (n_img != n_lab) throw io_error("idx: image/label counts differ");

  const int n = limit > 0 ? std::min(limit, n_img) : n_img;
  Dataset d;
  d.shape = {rows, cols};
  d.channels = 1;
  d.pixels.resize(std::size_t(n) * rows * cols);
  d.labels.resize(std::size_t(n));

  std::vector<unsigned char> buf(std::size_t(rows) * cols);
  for (int i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size())))
      throw io_error("idx: truncated image data");
    float* dst = d.pixels.data() + std::size_t(i) * buf.size();
    for (std::size_t k = 0; k < buf.size(); ++k)
      dst[k] = float(buf[k]) / 255.0f;
    char lb = 0;
    if (!lab.read(&lb, 1)) throw io_error("idx: truncated label data");
    d.labels[std::size_t(i)] = int(static_cast<unsigned char>(lb));
  }
  return d;
}

Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& batches,
                            int limit) {
  constexpr int kRecord = 1 + 3 * 32 * 32;
  Dataset d;
  d.shape = {32, 32};
  d.channels = 3;

  std::vector<unsigned char> rec(kRecord);
  for (const auto& path : batches) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cifar10: cannot open " + path.string());
    while (in.read(reinterpret_cast<char*>(rec.data()), kRecord)) {
      d.labels.push_back(int(rec[0]));
      const std::size_t base = d.pixels.size();
      d.pixels.resize(base + 3072);
      for (int k = 0; k < 3072; ++k)
        d.pixels[base + std::size_t(k)] = float(rec[std::size_t(1 + k)]) / 255.0f;
      if (limit > 0 && d.count() >= limit) return d;
    }
    if (in.gcount() != 0) throw io_error("cifar10: trailing partial record in " + path.string());
  }
  return d;
}

Dataset synthetic_separable(int count, ImageShape shape, double noise,
                            std::uint64_t seed) {
  shape.validate();
  if (count < 1) throw domain_error("synthetic_separable: count must be >= 1");
  Dataset d;
  d.shape = shape;
  d.channels = 1;
  d.pixels.resize(std::size_t(count) * shape.pixels());
  d.labels.resize(std::size_t(count));
  CounterRng rng(seed, 0x73796e7468ULL);

  const int half = shape.height / 2;
  for (int i = 0; i < count; ++i) {
    const int label = i % 2;
    d.labels[std::size_t(i)] = label;
    float* img = d.pixels.data() + std::size_t(i) * shape.pixels();
    for (int r = 0; r < shape.height; ++r) {
      const bool bright = label == 0 ? r < half : r >= half;
      for (int c = 0; c < shape.width; ++c) {
        double v = (bright ? 0.85 : 0.15) + noise * rng.normal();
        img[shape.index(r, c)] = float(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return d;
}

ChannelTensor make_batch(const Dataset& data, std::span<const int> indices) {
  if (indices.empty()) throw dimension_error("make_batch: empty index set");
  ChannelTensor batch(data.shape, data.channels, int(indices.size()));
  const int pixels = data.shape.pixels();
  for (int b = 0; b < int(indices.size()); ++b) {
    const auto s = data.sample(indices[std::size_t(b)]);
    for (int c = 0; c < data.channels; ++c)
      for (int p = 0; p < pixels; ++p)
        batch.at(c, p, b) = double(s[std::size_t(c) * pixels + p]);
  }
  return batch;
}

std::vector<int> batch_labels(const Dataset& data, std::span<const int> indices) {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    out[i] = data.labels[std::size_t(indices[i])];
  return out;
}

}  // namespace probeconv::nn
