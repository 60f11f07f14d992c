#pragma once

#include <stdexcept>
#include <string>

namespace epic {

/// Malformed or unsupported input file, or dimension mismatch between inputs.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No match left to interpolate from.
class EmptyMatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared during a numerical solve.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace epic
