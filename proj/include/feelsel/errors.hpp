#pragma once

#include <stdexcept>
#include <string>

namespace feelsel {

// Malformed configuration text (bad line, unknown key, unparsable value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A configuration value violates an invariant. field() names the offending key.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The model cannot produce a meaningful value (unusable link, saturated pool).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An engine invariant was broken at run time.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace feelsel
