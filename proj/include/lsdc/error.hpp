#pragma once

#include <stdexcept>
#include <string>

namespace lsdc {

/// Caller passed arguments that violate an operation's preconditions.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input data cannot support the requested design (degenerate, too small).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Text input (CSV, graph file, config) could not be parsed.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Network instance admits no solution (e.g. disconnected terminals).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lsdc
