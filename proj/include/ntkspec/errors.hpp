#pragma once

#include <stdexcept>
#include <string>

namespace ntkspec {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied parameter (shape, ratio, flag value).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A caller broke a documented precondition of an API function.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced while evaluating a user function or kernel.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DegenerateActivationError : public Error {
 public:
  using Error::Error;
};

class SingularArgumentError : public Error {
 public:
  using Error::Error;
};

// Matrix or eigenvalue file could not be parsed or has the wrong shape.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Fixed-point iteration failed to reach tolerance inside C^+.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double best_residual, int layer = -1)
      : Error(what), best_residual_(best_residual), layer_(layer) {}

  double best_residual() const { return best_residual_; }
  // Layer index the failure is attributed to, or -1 for the whole chain.
  int layer() const { return layer_; }

 private:
  double best_residual_;
  int layer_;
};

}  // namespace ntkspec
