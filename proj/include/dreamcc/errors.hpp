#pragma once

#include <stdexcept>
#include <string>

namespace dreamcc {

// Shape/axis mismatches, bad conv geometry, wrong image sizes.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Misuse of an op (backward on non-scalar, unknown reduction, ...).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Out-of-domain inputs: negative std, probabilities off the simplex, ...
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf detected in a value or gradient.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file / CLI / CSV parse failures. Carries a line number when known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg, int line = -1)
      : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_number(line) {}
  int line_number;
};

// Checkpoint/episode-file version or integrity failures.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Asking for work the component cannot do yet (e.g. sampling an empty replay).
struct NotReadyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dreamcc
