#pragma once

#include <stdexcept>
#include <string>

namespace ddl {

// Base for every library error.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad scalar arguments, shape mismatches in direct API calls, invalid
// hyper-parameters. CLI maps these to exit code 2.
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// A block partition does not tile the matrix it is applied to.
class PartitionError : public ArgumentError {
 public:
  explicit PartitionError(const std::string& msg) : ArgumentError(msg) {}
};

// Anything wrong with data read from disk (shape, values, labels, manifest
// consistency). CLI maps these to exit code 3.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Malformed text input; carries a 1-based line number when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, long line)
      : DataError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ParseError(const std::string& msg) : DataError(msg), line_(-1) {}
  long line() const { return line_; }

 private:
  long line_;
};

// File could not be opened / written.
class IoError : public DataError {
 public:
  explicit IoError(const std::string& msg) : DataError(msg) {}
};

// Structurally valid input whose contents violate an invariant
// (label out of range, atom norms too large, manifest inconsistency).
class ValidationError : public DataError {
 public:
  explicit ValidationError(const std::string& msg) : DataError(msg) {}
};

// Divergence or non-finite values inside an iterative solver.
// CLI maps these to exit code 4.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error(msg) {}
};

// Operation requires state that is not present (e.g. classifying with an
// untrained model).
class StateError : public Error {
 public:
  explicit StateError(const std::string& msg) : Error(msg) {}
};

}  // namespace ddl
