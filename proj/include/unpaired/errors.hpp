#pragma once

#include <stdexcept>
#include <string>

namespace unpaired {

// Bad magic numbers, malformed manifests, unparsable spec strings.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or truncated files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace unpaired
