#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace presup {

// Caller misuse: bad arguments, bad configuration, precondition violations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Malformed input data. `line` is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace presup
