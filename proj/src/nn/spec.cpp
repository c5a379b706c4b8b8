#include "probeconv/nn/spec.hpp"

#include <fstream>

#include "probeconv/errors.hpp"

namespace probeconv::nn {

const char* LayerSpec::kind_name(Kind k) {
  switch (k) {
    case Kind::conv: return "conv";
    case Kind::relu: return "relu";
    case Kind::maxpool: return "maxpool";
    case Kind::avgpool: return "avgpool";
    case Kind::flatten: return "flatten";
    case Kind::dense: return "dense";
    case Kind::log_softmax: return "log_softmax";
    case Kind::dropout: return "dropout";
  }
  return "?";
}

BlockSparsity LayerSpec::resolve_sparsity(int c_in) const {
  if (sparsity == "dense") return BlockSparsity::dense(c_in);
  if (sparsity == "default") return BlockSparsity::default_for(c_in);
  try {
    const double p = std::stod(sparsity);
    return BlockSparsity::uniform(c_in, p);
  } catch (const std::exception&) {
    throw spec_error("conv sparsity must be 'default', 'dense', or a number in (0,1]");
  }
}

namespace {

LayerSpec::Kind kind_from_name(const std::string& s) {
  using K = LayerSpec::Kind;
  if (s == "conv") return K::conv;
  if (s == "relu") return K::relu;
  if (s == "maxpool") return K::maxpool;
  if (s == "avgpool") return K::avgpool;
  if (s == "flatten") return K::flatten;
  if (s == "dense") return K::dense;
  if (s == "log_softmax") return K::log_softmax;
  if (s == "dropout") return K::dropout;
  throw spec_error("unknown layer type: " + s);
}

Shape3 shape_from_json(const nlohmann::json& j) {
  Shape3 s;
  s.channels = j.value("channels", 1);
  s.image.height = j.at("height").get<int>();
  s.image.width = j.at("width").get<int>();
  return s;
}

}  // namespace

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  try {
    spec.name = j.value("name", "");
    spec.description = j.value("description", "");
    spec.input = shape_from_json(j.at("input"));
    spec.shape_table = j.value("shape_table", false);
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.kind = kind_from_name(lj.at("type").get<std::string>());
      switch (l.kind) {
        case LayerSpec::Kind::conv:
          l.kernel = lj.at("kernel").get<int>();
          l.c_out = lj.at("c_out").get<int>();
          l.probed = lj.value("mode", "exact") == "probed";
          if (lj.value("mode", "exact") != "exact" && !l.probed)
            throw spec_error("conv mode must be 'exact' or 'probed'");
          l.r = lj.value("r", 0);
          if (l.probed && l.r < 1)
            throw spec_error("probed conv requires r >= 1");
          if (lj.contains("sparsity")) {
            const auto& sj = lj.at("sparsity");
            l.sparsity = sj.is_number() ? std::to_string(sj.get<double>())
                                        : sj.get<std::string>();
          }
          l.bias = lj.value("bias", true);
          break;
        case LayerSpec::Kind::maxpool:
        case LayerSpec::Kind::avgpool:
          l.pool = lj.at("size").get<int>();
          if (l.pool < 1) throw spec_error("pool size must be >= 1");
          break;
        case LayerSpec::Kind::dense:
          l.out = lj.at("out").get<int>();
          if (l.out < 1) throw spec_error("dense out must be >= 1");
          break;
        case LayerSpec::Kind::dropout:
          l.p = lj.at("p").get<double>();
          if (!(l.p >= 0.0 && l.p < 1.0))
            throw spec_error("dropout p must be in [0, 1)");
          break;
        default:
          break;
      }
      if (lj.contains("in")) l.in_shape = shape_from_json(lj.at("in"));
      spec.layers.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw spec_error(std::string("network spec: ") + e.what());
  }
  spec.shapes();  // validate the chain at load
  return spec;
}

NetworkSpec NetworkSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open network spec: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw spec_error(std::string("network spec parse: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json NetworkSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  if (!description.empty()) j["description"] = description;
  j["input"] = {{"channels", input.channels},
                {"height", input.image.height},
                {"width", input.image.width}};
  if (shape_table) j["shape_table"] = true;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    nlohmann::json lj;
    lj["type"] = LayerSpec::kind_name(l.kind);
    switch (l.kind) {
      case LayerSpec::Kind::conv:
        lj["kernel"] = l.kernel;
        lj["c_out"] = l.c_out;
        lj["mode"] = l.probed ? "probed" : "exact";
        if (l.probed) lj["r"] = l.r;
        if (l.sparsity != "default") lj["sparsity"] = l.sparsity;
        if (!l.bias) lj["bias"] = false;
        break;
      case LayerSpec::Kind::maxpool:
      case LayerSpec::Kind::avgpool:
        lj["size"] = l.pool;
        break;
      case LayerSpec::Kind::dense:
        lj["out"] = l.out;
        break;
      case LayerSpec::Kind::dropout:
        lj["p"] = l.p;
        break;
      default:
        break;
    }
    if (l.in_shape)
      lj["in"] = {{"channels", l.in_shape->channels},
                  {"height", l.in_shape->image.height},
                  {"width", l.in_shape->image.width}};
    j["layers"].push_back(lj);
  }
  return j;
}

Shape3 layer_output_shape(const LayerSpec& layer, const Shape3& in) {
  using K = LayerSpec::Kind;
  if (in.channels < 1 || in.image.height < 1 || in.image.width < 1)
    throw spec_error("layer input shape is degenerate");
  switch (layer.kind) {
    case K::conv: {
      if (layer.kernel < 1 || layer.kernel % 2 == 0)
        throw spec_error("conv kernel must be odd and positive");
      if (layer.c_out < 1) throw spec_error("conv c_out must be >= 1");
      return {layer.c_out, in.image};  // circular conv preserves geometry
    }
    case K::relu:
    case K::dropout:
      return in;
    case K::maxpool:
    case K::avgpool: {
      const int h = in.image.height / layer.pool;
      const int w = in.image.width / layer.pool;
      if (h < 1 || w < 1) throw spec_error("pool collapses the image");
      return {in.channels, {h, w}};
    }
    case K::flatten:
      return {1, {1, in.numel()}};
    case K::dense:
      if (in.channels != 1 || in.image.height != 1)
        throw spec_error("dense requires a flat input (use flatten)");
      return {1, {1, layer.out}};
    case K::log_softmax:
      if (in.channels != 1 || in.image.height != 1)
        throw spec_error("log_softmax requires a flat input");
      return in;
  }
  throw spec_error("unhandled layer kind");
}

std::vector<std::pair<Shape3, Shape3>> NetworkSpec::shapes() const {
  std::vector<std::pair<Shape3, Shape3>> result;
  Shape3 cur = input;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    Shape3 in = cur;
    if (l.in_shape) {
      if (!shape_table && !(*l.in_shape == cur))
        throw spec_error("layer " + std::to_string(i) +
                         " declared input conflicts with the chain");
      in = *l.in_shape;
    } else if (shape_table) {
      // Shape tables exist to encode branched architectures; every row must
      // say what it actually sees.
      throw spec_error("shape-table spec requires a declared input per layer");
    }
    const Shape3 out = layer_output_shape(l, in);
    result.emplace_back(in, out);
    cur = out;
  }
  return result;
}

NetworkSpec NetworkSpec::with_probe_r(int r) const {
  NetworkSpec copy = *this;
  for (auto& l : copy.layers)
    if (l.kind == LayerSpec::Kind::conv && l.probed) l.r = r;
  return copy;
}

}  // namespace probeconv::nn
