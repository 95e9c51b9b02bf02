#pragma once

#include <stdexcept>
#include <string>

namespace cogen {

/// Invalid user-supplied configuration (scene files, parameters, CLI input).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes that do not agree (vector vs. matrix, field vs. grid).
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values produced inside a numerical kernel.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pose or trajectory that violates rigid-motion invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cogen
