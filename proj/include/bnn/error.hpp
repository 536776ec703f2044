#ifndef BNN_ERROR_HPP
#define BNN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bnn {

enum class ErrorKind {
  invalid_parameter,
  domain,
  dimension,
  singular_matrix,
  layout,
  unsupported_transform,
  degenerate,
  diverged_training,
  unrecoverable_state,
  step_size_underflow,
  all_chains_failed,
  parse,
  validation,
  io,
  schema,
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::domain: return "domain";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::singular_matrix: return "singular-matrix";
    case ErrorKind::layout: return "layout";
    case ErrorKind::unsupported_transform: return "unsupported-transform";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::diverged_training: return "diverged-training";
    case ErrorKind::unrecoverable_state: return "unrecoverable-state";
    case ErrorKind::step_size_underflow: return "step-size-underflow";
    case ErrorKind::all_chains_failed: return "all-chains-failed";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The kind
/// lets callers (and the CLI exit-code mapping) branch without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by training when the loss becomes non-finite.
class DivergedTraining : public Error {
 public:
  DivergedTraining(std::size_t epoch, const std::string& what)
      : Error(ErrorKind::diverged_training,
              what + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Raised when parsing text input; carries a 1-based line and column.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column,
             const std::string& what)
      : Error(ErrorKind::parse, source + ":" + std::to_string(line) + ":" +
                                    std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace bnn

#endif  // BNN_ERROR_HPP
