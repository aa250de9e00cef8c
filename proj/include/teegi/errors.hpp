#pragma once

#include <stdexcept>
#include <string>

namespace teegi {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters at construction time (bad band edges, grid too small, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (shape mismatch, unknown label, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A model violates a structural invariant (zero lead-field column, R_vv <= 0).
class ModelError : public Error {
 public:
  using Error::Error;
};

class NumericalRankError : public Error {
 public:
  using Error::Error;
};

class CalibrationIncomplete : public Error {
 public:
  using Error::Error;
};

class NotCalibrated : public Error {
 public:
  NotCalibrated() : Error("pipeline is not calibrated; run a calibration span first") {}
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace teegi
