#pragma once

#include <stdexcept>
#include <string>

namespace nvens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an operation's input was violated.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; the message names the offending row/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int row, int col)
      : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

 private:
  int row_;
  int col_;
};

/// Sensor whose sensitivity diverges (pulse error ±π/2, echo dead point, zero CW contrast).
class InfiniteSensitivity : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Invalid run configuration (missing/unknown key, out-of-range value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nvens
