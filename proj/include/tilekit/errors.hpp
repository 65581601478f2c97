#pragma once

#include <stdexcept>
#include <string>

namespace tilekit {

// Base class for all tilekit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand dimensions inconsistent with the requested operation. The message
// names the offending operand.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Kernel configuration rejected by a device budget. The message carries every
// violated budget.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (config grammar, TOML, CSV, tuning DB). The message
// carries the location when one is known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Requested a variant the library does not implement (unsupported transform
// size, unsupported stride).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// API precondition violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written. The message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Tuning could not select a configuration. The message carries per-config
// diagnostics.
class TuningError : public Error {
 public:
  using Error::Error;
};

}  // namespace tilekit
