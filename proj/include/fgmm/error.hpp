#pragma once

#include <stdexcept>
#include <string>

namespace fgmm {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (t < 0, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent sizes between vectors/matrices, or an empty sample.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateInstrumentError : public Error {
 public:
  DegenerateInstrumentError(std::string which, int column)
      : Error("degenerate instrument: column " + which + "[" + std::to_string(column) +
              "] has (near) zero sample variance"),
        which_(std::move(which)),
        column_(column) {}

  const std::string& which() const noexcept { return which_; }
  int column() const noexcept { return column_; }

 private:
  std::string which_;
  int column_;
};

// Non-finite intermediate quantity in an objective or solver.
class NumericError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public Error {
 public:
  using Error::Error;
};

// Malformed user input: CSV cells, config fields, command-line values.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace fgmm
