#pragma once

#include <stdexcept>
#include <string>

namespace nnlr {

/// Operands whose dimensions do not fit together.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A value outside the domain an operation accepts (negative where
/// nonnegative is required, non-unit norm, non-finite entry, ...).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure that could not produce a usable result.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A configuration or serialized document that cannot be interpreted.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A file that could not be read or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace nnlr
