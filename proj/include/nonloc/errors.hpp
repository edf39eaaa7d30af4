#pragma once

#include <stdexcept>
#include <string>

namespace nonloc {

// Invalid construction parameters (alpha out of range, det B != 1, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation outside the mathematical domain of a map (kernel at 0, non-SPD root).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Violated call precondition (point not interior, domain without boundary).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested operation is not available for the given object.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Quadrature did not reach its tolerance within the refinement budget.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A certification found the input defective.
class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed run configuration.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nonloc
