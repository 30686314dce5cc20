#pragma once

#include <stdexcept>
#include <string>

namespace lrbm {

/// Thrown when a caller violates an operation's preconditions
/// (dimension mismatch, index out of range, invalid configuration).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or an ill-posed numerical problem.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// I - U is not positive definite, so the visible Gaussian has no normalizer.
class NonNormalizableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

[[noreturn]] inline void contract_failure(const std::string& what) { throw ContractError(what); }

inline void require(bool condition, const char* what) {
  if (!condition) contract_failure(what);
}

}  // namespace detail
}  // namespace lrbm
