#include "probeconv/audit.hpp"

#include <algorithm>

#include "probeconv/errors.hpp"

namespace probeconv {

namespace {

std::size_t bits_to_bytes(std::size_t bits) { return (bits + 7) / 8; }

}  // namespace

MemoryReport audit(const nn::NetworkSpec& spec, int batch, int r,
                   int element_bytes) {
  if (batch < 1) throw domain_error("audit: batch must be >= 1");
  if (r < 1) throw domain_error("audit: r must be >= 1");
  if (element_bytes != 4 && element_bytes != 8)
    throw domain_error("audit: element_bytes must be 4 or 8");

  const auto shapes = spec.shapes();
  MemoryReport rep;
  rep.batch = batch;
  rep.r = r;
  rep.element_bytes = element_bytes;
  rep.note =
      "activation state only; weights, optimizer state, and workspace "
      "buffers are out of scope";

  using K = nn::LayerSpec::Kind;
  const std::size_t eb = std::size_t(element_bytes);
  const std::size_t b = std::size_t(batch);

  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const auto& [in, out] = shapes[i];
    MemoryRow row;
    row.kind = nn::LayerSpec::kind_name(l.kind);
    row.layer = row.kind + std::string("_") + std::to_string(i);

    const std::size_t in_elems = std::size_t(in.numel()) * b;
    const std::size_t out_elems = std::size_t(out.numel()) * b;

    switch (l.kind) {
      case K::conv: {
        // Probed storage never exceeds the activation it replaces.
        const std::size_t r_eff =
            std::min<std::size_t>(std::size_t(r), std::size_t(in.numel()));
        row.conventional_scalars = in_elems;
        row.conventional_bytes = in_elems * eb;
        row.probed_bytes = r_eff * b * eb;
        row.probed_scalar_equiv = double(r_eff * b);
        break;
      }
      case K::relu: {
        row.conventional_scalars = in_elems;
        row.conventional_bytes = in_elems * eb;
        row.probed_bytes = bits_to_bytes(in_elems);
        row.probed_scalar_equiv = double(row.probed_bytes) / double(eb);
        break;
      }
      case K::maxpool: {
        // 4-byte argmax index per output element, unchanged by probing.
        const std::size_t idx_bytes = out_elems * 4;
        row.conventional_scalars = idx_bytes / eb;
        row.conventional_bytes = idx_bytes;
        row.probed_bytes = idx_bytes;
        row.probed_scalar_equiv = double(idx_bytes) / double(eb);
        break;
      }
      case K::dense: {
        row.conventional_scalars = in_elems;
        row.conventional_bytes = in_elems * eb;
        row.probed_bytes = row.conventional_bytes;
        row.probed_scalar_equiv = double(in_elems);
        break;
      }
      case K::log_softmax: {
        row.conventional_scalars = out_elems;
        row.conventional_bytes = out_elems * eb;
        row.probed_bytes = row.conventional_bytes;
        row.probed_scalar_equiv = double(out_elems);
        break;
      }
      case K::dropout: {
        const std::size_t mask_bytes = bits_to_bytes(in_elems);
        row.conventional_scalars = std::size_t(double(mask_bytes) / double(eb));
        row.conventional_bytes = mask_bytes;
        row.probed_bytes = mask_bytes;
        row.probed_scalar_equiv = double(mask_bytes) / double(eb);
        break;
      }
      case K::avgpool:
      case K::flatten:
        break;
    }

    row.reduction_factor =
        row.probed_bytes == 0
            ? 1.0
            : double(row.conventional_bytes) / double(row.probed_bytes);
    if (row.conventional_bytes == 0) row.reduction_factor = 1.0;

    rep.total_conventional_bytes += row.conventional_bytes;
    rep.total_probed_bytes += row.probed_bytes;
    rep.rows.push_back(std::move(row));
  }

  rep.overall_factor =
      rep.total_probed_bytes == 0
          ? 1.0
          : double(rep.total_conventional_bytes) / double(rep.total_probed_bytes);
  return rep;
}

}  // namespace probeconv
