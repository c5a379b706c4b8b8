#pragma once

#include <string>
#include <vector>

#include "probeconv/nn/spec.hpp"

namespace probeconv {

/// One per-layer row of the activation-memory comparison. Byte columns are
/// exact integers; scalar columns are byte counts divided by the element
/// width (fractional for bit-packed state).
struct MemoryRow {
  std::string layer;
  std::string kind;
  std::size_t conventional_scalars = 0;
  std::size_t conventional_bytes = 0;
  double probed_scalar_equiv = 0.0;
  std::size_t probed_bytes = 0;
  double reduction_factor = 1.0;
};

struct MemoryReport {
  std::vector<MemoryRow> rows;
  std::size_t total_conventional_bytes = 0;
  std::size_t total_probed_bytes = 0;
  double overall_factor = 1.0;
  int batch = 0;
  int r = 0;
  int element_bytes = 0;
  std::string note;  // accounting conventions, prepended to CSV output
};

/// Static per-layer accounting of activation state kept for the backward
/// pass, conventional vs probed, for a fixed batch size and probe count.
///
/// Conventions (activations only -- no weights, optimizer state, or
/// workspace):
///   conv        conventional N*C_in*B scalars; probed min(r, N*C_in)*B
///   relu        conventional numel scalars; probed 1 sign bit per element,
///               rounded up to whole bytes per layer
///   maxpool     4-byte argmax index per output element, both modes
///   avgpool     nothing
///   flatten     nothing
///   dense       input activation, both modes
///   log_softmax output activation, both modes
///   dropout     1 mask bit per element rounded up to bytes, both modes
MemoryReport audit(const nn::NetworkSpec& spec, int batch, int r,
                   int element_bytes = 8);

}  // namespace probeconv
