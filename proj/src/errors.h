#pragma once

#include <stdexcept>
#include <string>

namespace uie {

// Thrown when tensor dimensions do not satisfy an operation's contract.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for invalid configuration values; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when non-finite values reach a numeric kernel.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for file and directory problems; the message carries the path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uie
