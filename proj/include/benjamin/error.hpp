#pragma once

#include <stdexcept>
#include <string>

namespace benjamin {

/// Bad argument to a public operation (non-positive length, odd N, grid mismatch...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters outside the admissible set, e.g. gamma >= gamma_max(c_s)
/// or a resolvent symbol that is not positive on every mode.
class Inadmissible : public std::domain_error {
 public:
  Inadmissible(const std::string& what, double gamma, double gamma_max)
      : std::domain_error(what), gamma_(gamma), gamma_max_(gamma_max) {}

  double gamma() const noexcept { return gamma_; }
  double gamma_max() const noexcept { return gamma_max_; }

 private:
  double gamma_;
  double gamma_max_;
};

/// Numerical breakdown that is not a plain non-convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace benjamin
