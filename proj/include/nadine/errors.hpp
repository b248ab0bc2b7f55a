#ifndef NADINE_ERRORS_HPP
#define NADINE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nadine {

/// Shapes of two operands disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A layer, extractor or run configuration is internally inconsistent.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A required input modality or field is missing.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Node/layer surgery that would break a structural invariant.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a gradient turns non-finite; carries the offending layer.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

/// Malformed cell in an input file.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " +
                           what),
        row_(row),
        column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Input file does not match the expected schema (columns, label set).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nadine

#endif  // NADINE_ERRORS_HPP
