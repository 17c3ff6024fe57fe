#pragma once

#include <stdexcept>
#include <string>

namespace kaf {

/// A numeric procedure failed to converge or produced an unusable result.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed configuration or snapshot input.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kaf
