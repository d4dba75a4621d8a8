#pragma once

#include <stdexcept>
#include <string>

namespace iclust {

// Invalid parameter values for an operation (negative rates, probabilities
// outside [0,1], supercritical chains where subcritical is required, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Numerical failures that are not caused by a malformed argument list.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point process with the requested parameters does not exist.
struct ExistenceError : NumericError {
  using NumericError::NumericError;
};

// Series that do not converge for the requested configuration.
struct DivergenceError : NumericError {
  using NumericError::NumericError;
};

// Pointwise evaluation at a location where the kernel is not a function.
struct EvaluationError : NumericError {
  using NumericError::NumericError;
};

// Malformed experiment or sampler configuration.
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace iclust
