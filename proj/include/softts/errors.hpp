#pragma once

#include <stdexcept>
#include <string>

namespace softts {

/// Malformed input file (UCR text, representation file, soft-label cache).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not line up: row counts, series lengths, class counts.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or plan. `field` is a dotted path into the plan when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : std::runtime_error(field.empty() ? what : field + ": " + what), message_(what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }
  /// The message without the field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::string field_;
};

/// Missing (dataset, method) cells when aggregating results.
class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric failure: non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace softts
