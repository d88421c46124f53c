#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flipctl {

/// Base of every error raised by the library. The C API maps each subclass
/// onto one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed network, problem, config, snapshot or policy text.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);
  ParseError(const std::string& message, std::size_t line);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

  /// Same error with the message prefixed by the file it came from.
  ParseError in_file(const std::string& file) const;

 private:
  struct Raw {};
  ParseError(Raw, const std::string& message, std::size_t line, std::size_t column)
      : Error(message), line_(line), column_(column) {}

  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

/// Argument outside its documented domain (dimension mismatch, flip index
/// outside the flip set, empty initial set, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A dense table or exhaustive enumeration would exceed the size guard.
class ResourceRefused : public Error {
 public:
  using Error::Error;
};

/// Operation not allowed in the current state, e.g. stepping a finished episode.
class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace flipctl
