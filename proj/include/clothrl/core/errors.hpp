#pragma once

#include <stdexcept>
#include <string>

namespace clothrl {

// Error taxonomy. The CLI maps ConfigError/FormatError to exit code 2 and
// NumericError/SimInstabilityError to exit code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChecksumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BufferExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBufferError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimInstabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace clothrl
