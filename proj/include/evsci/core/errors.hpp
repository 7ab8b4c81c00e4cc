#pragma once

#include <stdexcept>
#include <string>

namespace evsci {

// Invalid scene/sensor/solver configuration, out-of-range parameters,
// violated operation preconditions (invalid fraction, invalid count, ...).
struct InvalidConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched image/mask/frame dimensions, or inputs too small for an
// operation's window.
struct DimensionMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system failures and unparseable files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A binary or CSV event record that cannot be decoded (truncation, bad
// polarity, ...).
struct MalformedRecordError : IoError {
  using IoError::IoError;
};

// A pipeline stage was asked for an artifact that does not exist or fails
// to load; carries the offending path in the message.
struct MissingArtifactError : IoError {
  using IoError::IoError;
};

// Registration input with no usable structure (variance below threshold).
struct NoSignalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver produced a non-finite iterate.
struct DivergedError : std::runtime_error {
  DivergedError(const std::string& msg, int iteration)
      : std::runtime_error(msg), iteration(iteration) {}
  int iteration = 0;
};

}  // namespace evsci
