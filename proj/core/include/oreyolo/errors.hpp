#pragma once

#include <stdexcept>
#include <string>

namespace oreyolo {

/// Model or training configuration violates an invariant (bad multiples,
/// indivisible channel counts, non-power-of-two pyramid ratios, ...).
class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tensor shape does not match what a block expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-range dataset content. The message names the file
/// (and line, when known).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown config key, unparsable value, or checkpoint/dataset mismatch.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oreyolo
