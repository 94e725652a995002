#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vanhove {

/// Input violates an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two fields or operators live on different grids.
class GridMismatch : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A computation produced something unusable (non-finite values, empty support).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration text could not be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

// The default handler writes "warning: <msg>" to stderr.
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace vanhove
