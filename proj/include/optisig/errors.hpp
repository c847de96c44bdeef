#pragma once

#include <stdexcept>
#include <string>

namespace optisig {

// Input vector carries no direction (e.g. zero-meaned constant signal).
struct DegenerateInput : std::invalid_argument {
  explicit DegenerateInput(const std::string& what) : std::invalid_argument(what) {}
};

// Quadrature or linear algebra produced a non-finite result.
struct NumericFailure : std::runtime_error {
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// Malformed on-disk document; message carries field/line diagnostics.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace optisig
