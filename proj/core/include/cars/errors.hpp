#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cars {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (terminated prefix passed to
/// an LM, mask requested for a non-viable prefix, ...). These indicate a
/// logic bug in the caller rather than bad input data.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input document (LM table, DFA, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Grammar source syntax error with a 1-based source location.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : FormatError(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// The constraint admits no sequence at all.
class EmptyLanguageError : public Error {
 public:
  using Error::Error;
};

/// Remote LM endpoint unreachable, returned non-200, or sent a bad payload.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Probability bookkeeping went out of tolerance. Never recoverable.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace cars
