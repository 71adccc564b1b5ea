#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spectralcf {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Structural precondition broken, e.g. an isolated vertex reaching the graph builder.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Repeated eigenvalues whose filter targets disagree.
class DegenerateInterpolationError : public Error {
 public:
  using Error::Error;
};

// Caller violated an API contract (e.g. backward without a matching trace).
class ContractError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectralcf
