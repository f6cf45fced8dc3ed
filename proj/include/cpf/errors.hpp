#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpf {

/// Bad or inconsistent input data (CSV contents, dataset invariants).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured column is absent from the CSV header.
class SchemaError : public DataError {
 public:
  explicit SchemaError(const std::string& column)
      : DataError("missing column '" + column + "'"), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// A CSV cell could not be parsed. `row` is 1-based over data rows
/// (the header is not counted).
class ParseError : public DataError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

enum class ValidationFailure {
  kEmpty,
  kNoCovariates,
  kLengthMismatch,
  kBadTreatment,
  kNonFinite,
};

class ValidationError : public DataError {
 public:
  ValidationError(ValidationFailure kind, const std::string& what)
      : DataError(what), kind_(kind) {}
  ValidationFailure kind() const noexcept { return kind_; }

 private:
  ValidationFailure kind_;
};

/// Invalid configuration values (parameters out of range).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure while growing a tree or training a forest.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covariate vector of the wrong dimension, or similar caller mistakes at
/// prediction/evaluation time.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or incompatible model file.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpf
