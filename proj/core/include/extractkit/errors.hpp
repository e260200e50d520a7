#pragma once

#include <stdexcept>
#include <string>

namespace extractkit {

// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric kernel saw or would produce a non-finite value.
class KernelError : public Error {
 public:
  KernelError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The query budget would be exceeded. Nothing was sent to the oracle.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// An evasion action would lower a monotone feature.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

// A component broke a contract another component relies on (e.g. a sampling
// strategy returned an already-labeled index).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace extractkit
