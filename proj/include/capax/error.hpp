#ifndef CAPAX_ERROR_HPP
#define CAPAX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace capax {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown activation name.
class CatalogError : public Error {
 public:
  using Error::Error;
};

/// A value object failed its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation not available for the given input (e.g. Taylor data of relu).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Activation or shape does not satisfy the hypotheses an operation needs.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Row and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace capax

#endif  // CAPAX_ERROR_HPP
