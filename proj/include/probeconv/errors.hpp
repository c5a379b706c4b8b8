#pragma once

#include <stdexcept>
#include <string>

namespace probeconv {

// Error taxonomy. Every throwing precondition in the library maps onto one of
// these types so the CLI can translate failures into exit codes.

// Shape or size mismatch between operands.
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Problem instance exceeds a desk-scale limit (dense oracles, SVD inputs).
struct capacity_error : std::length_error {
  using std::length_error::length_error;
};

// Scalar argument outside its mathematical domain (probabilities, counts).
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Block-sparse probe generation exhausted its redraw budget.
struct sparsity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A compressed activation was replayed against a drifted layer config.
struct context_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Network spec / config rejected at load (shape chain, unknown fields).
struct spec_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File and dataset I/O failures.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace probeconv
