#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hero {

// Base of every error thrown by the library. The CLI maps the concrete type
// to a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or configuration value (exit 2).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (exit 3).
class DataError : public Error {
 public:
  using Error::Error;
};

// A required column is missing or the header does not match a schema (exit 3).
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Unparsable CSV cell.
class CellError : public DataError {
 public:
  CellError(std::size_t row, std::size_t col, const std::string& what)
      : DataError("row " + std::to_string(row) + ", col " + std::to_string(col) + ": " + what),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

// Singular system, non-finite intermediate value (exit 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training diverged (exit 4).
class TrainingError : public NumericError {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : NumericError("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// A black-box function returned a non-finite value at a probe point.
class EvaluationError : public NumericError {
 public:
  EvaluationError(std::size_t probe, const std::string& what)
      : NumericError("probe " + std::to_string(probe) + ": " + what), probe_(probe) {}

  std::size_t probe() const noexcept { return probe_; }

 private:
  std::size_t probe_;
};

}  // namespace hero
