#pragma once

#include <stdexcept>
#include <string>

namespace lcfuse {

// Base of every library error. Subtypes are grouped by the CLI into exit
// codes: config errors (2), data/format errors (3), diverged or failed
// numeric checks (4).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Data/format family.
struct DataError : Error {
  using Error::Error;
};

// Numeric-failure family.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace lcfuse
