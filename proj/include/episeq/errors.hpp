#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace episeq {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A value fell outside a distribution's support (e.g. age past the modeled range).
class OutOfSupportError : public Error {
 public:
  using Error::Error;
};

// A sequence operation was handed a zero-length sequence it cannot score.
class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

// A weighted update received zero total weight; the state is dead and the
// caller is expected to keep the previous parameters instead.
class ZeroWeightError : public Error {
 public:
  using Error::Error;
};

// A token or item id is not part of the relevant vocabulary.
class UnknownTokenError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Structurally valid input that violates the declared schema or model shape.
class SchemaViolationError : public Error {
 public:
  using Error::Error;
};

// A fit or summary was requested on an empty dataset.
class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace episeq
