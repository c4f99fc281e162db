#pragma once

#include <stdexcept>
#include <string>

namespace vpr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor, layer or descriptor shapes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument values (out-of-range indices, bad hyperparameters).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures: missing, unreadable or unwritable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (ground truth tables, config files, lists).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Binary container failures. `kind()` tells the failure classes apart.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kVersionMismatch, kTruncated, kChecksumMismatch, kMalformed };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Training diverged (non-finite loss) or could not start.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace vpr
