#pragma once

#include <stdexcept>
#include <string>

namespace orbseg {

// Base for every error raised by the library. Messages are single-line so the
// CLI can forward them verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invalid configuration (taxonomy, scene, class map, mesh text).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Encoded image does not match the expected layout or palette.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace orbseg
