#pragma once

#include <stdexcept>
#include <string>

namespace hcp {

/// Bad parameters or malformed input files (CLI exit code 2).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A construction failed its own certification (CLI exit code 1).
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A search or enumeration would exceed its configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hcp
