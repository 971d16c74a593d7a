#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace floodtwin {

// Bad or inconsistent input data (files, configs, contract violations).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text-format parse failure; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Solver blow-up, non-finite state, or a degenerate numerical quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace floodtwin
