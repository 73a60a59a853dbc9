#pragma once

#include <stdexcept>
#include <string>

namespace magnonqed {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameter or malformed input. Messages are path-qualified for
// configuration fields, e.g. "magnet.H_c_T: must be >= H_a_T".
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

// Linearization found a negative squared mode frequency.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, int branch)
      : Error(what), branch_(branch) {}
  int branch() const { return branch_; }

 private:
  int branch_ = -1;
};

// Response matrix is exactly singular at a real pole.
class PoleError : public Error {
 public:
  using Error::Error;
};

// Mode with vanishing net dynamic magnetization.
class DegenerateModeError : public Error {
 public:
  using Error::Error;
};

// G <= max(kappa, gamma): no drive power reaches strong coupling.
class NeverStrongError : public Error {
 public:
  using Error::Error;
};

}  // namespace magnonqed
