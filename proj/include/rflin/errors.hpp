#pragma once

#include <stdexcept>
#include <string>

namespace rflin {

// A caller broke a documented contract (reward outside [0,1], invalid
// policy row, ...). The CLI maps this to exit code 3.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed instance / dataset document. The message carries line and
// field information when available.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad experiment configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive policy enumeration would exceed its budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rflin
