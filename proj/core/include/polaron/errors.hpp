#pragma once

#include <stdexcept>
#include <string>

namespace polaron {

// Bad arguments or configuration.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Evaluation point outside the region where a formula is defined
// (on the cut, too close to the two-boson edge, empty domain).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, failed brackets, minimizers that did not converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Work or memory estimate above the configured budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polaron
