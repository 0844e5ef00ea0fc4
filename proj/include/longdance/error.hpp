#pragma once

#include <stdexcept>
#include <string>

namespace longdance {

/// Base class for every error raised by the library. The CLI prints `kind()`
/// followed by the message and exits nonzero.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class DegenerateRotationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate-rotation"; }
};

class InvalidRotationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-rotation"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape-mismatch"; }
};

class RangeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "out-of-range"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-argument"; }
};

/// File-format problems. Each failure mode has its own subclass so callers
/// (and tests) can tell a bad header from a truncated payload.
class ParseError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parse-error"; }
};

class HeaderError : public ParseError {
 public:
  using ParseError::ParseError;
  const char* kind() const noexcept override { return "malformed-header"; }
};

class SpanOverlapError : public ParseError {
 public:
  using ParseError::ParseError;
  const char* kind() const noexcept override { return "span-overlap"; }
};

class FrameLengthError : public ParseError {
 public:
  using ParseError::ParseError;
  const char* kind() const noexcept override { return "frame-length-mismatch"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config-error"; }
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training-diverged"; }
};

}  // namespace longdance
