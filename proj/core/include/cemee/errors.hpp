#pragma once

#include <stdexcept>
#include <string>

namespace cemee {

// Bad configuration: malformed JSON, unknown keys, out-of-range options.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad data: schema/invariant violations in a panel or feature spec.
struct DataError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: non-convergence, singular system, overflow.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cemee
