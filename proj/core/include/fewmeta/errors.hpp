#pragma once

#include <stdexcept>
#include <string>

namespace fewmeta {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition (bad counts, k too small, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure hit its iteration or node cap before meeting tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A density's superlevel set is not an interval where one was assumed.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fewmeta
