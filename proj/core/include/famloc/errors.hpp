#ifndef FAMLOC_ERRORS_HPP_
#define FAMLOC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace famloc {

/// Input violates a documented precondition or schema (CLI exit code 1).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension/length disagreement between paired inputs.
class LengthMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// File could not be opened, read or written (CLI exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace famloc

#endif  // FAMLOC_ERRORS_HPP_
