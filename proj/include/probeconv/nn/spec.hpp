#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probeconv/image.hpp"
#include "probeconv/probing.hpp"

#include <json.hpp>

namespace probeconv::nn {

/// (channels, image) geometry flowing between layers. Flat vectors are
/// represented as channels = 1, height = 1, width = length.
struct Shape3 {
  int channels = 0;
  ImageShape image;

  int numel() const { return channels * image.pixels(); }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// One layer descriptor. Fields are populated per kind; `in_shape` is an
/// optional declared input geometry used by shape-table files (memory audits
/// of architectures with branches that a sequential chain cannot express).
struct LayerSpec {
  enum class Kind { conv, relu, maxpool, avgpool, flatten, dense, log_softmax, dropout };

  Kind kind = Kind::relu;

  // conv
  int kernel = 0;
  int c_out = 0;
  bool probed = false;
  int r = 0;
  std::string sparsity = "default";  // "default" (1/c_in) | "dense" | numeric string
  bool bias = true;

  // maxpool / avgpool
  int pool = 0;

  // dense
  int out = 0;

  // dropout
  double p = 0.0;

  std::optional<Shape3> in_shape;

  static const char* kind_name(Kind k);
  BlockSparsity resolve_sparsity(int c_in) const;
};

struct NetworkSpec {
  std::string name;
  std::string description;
  Shape3 input;
  /// Shape-table files relax chain validation: each layer uses its declared
  /// input shape. Such specs are audit-only and cannot be built for training.
  bool shape_table = false;
  std::vector<LayerSpec> layers;

  static NetworkSpec from_json(const nlohmann::json& j);
  static NetworkSpec load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Per-layer (input, output) shapes. Validates the chain (or the declared
  /// shapes); throws spec_error on an incompatible sequence.
  std::vector<std::pair<Shape3, Shape3>> shapes() const;

  /// Copy with every probed conv layer's r replaced.
  NetworkSpec with_probe_r(int r) const;
};

/// Output shape of one layer given its input; throws spec_error when the
/// layer cannot accept the input.
Shape3 layer_output_shape(const LayerSpec& layer, const Shape3& in);

}  // namespace probeconv::nn
