#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tactile {

// Precondition violated by a caller-supplied value.
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file content (bad magic, inconsistent header, out-of-range record).
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File ended before the header promised; offset is where the short read began.
class TruncationError : public FormatError {
public:
  TruncationError(const std::string& what, std::uint64_t offset)
      : FormatError(what + " (truncated at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite value encountered in a numeric pipeline.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Parameter file written for a different network topology.
class IncompatibleModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tactile
