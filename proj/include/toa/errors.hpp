#pragma once

#include <stdexcept>
#include <string>

namespace toa {

/// Diagnostic categories. The CLI maps them onto process exit codes.
enum class ErrorCategory {
  Config,       ///< malformed or inconsistent input
  Numerical,    ///< breakdown of a solver, CFL violation, non-finite state
  Validity,     ///< a run-validity monitor tripped (far wall, budget, ...)
  Domain,       ///< argument outside the region where an operation is defined
  Semantics,    ///< quantity requested from a record that cannot carry it
  Undefined,    ///< conditional on an event of probability zero
};

const char *category_name(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string &what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string &what, std::string key = {}, int line = 0)
      : Error(ErrorCategory::Config, what), key_(std::move(key)), line_(line) {}
  const std::string &key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string &what) : Error(ErrorCategory::Numerical, what) {}
};

/// Raised when an explicit step would exceed its stability limit.
class CflError : public NumericalError {
 public:
  CflError(const std::string &what, double suggested_dt)
      : NumericalError(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const noexcept { return suggested_dt_; }

 private:
  double suggested_dt_;
};

class ValidityError : public Error {
 public:
  explicit ValidityError(const std::string &what) : Error(ErrorCategory::Validity, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string &what) : Error(ErrorCategory::Domain, what) {}
};

class SemanticsError : public Error {
 public:
  explicit SemanticsError(const std::string &what) : Error(ErrorCategory::Semantics, what) {}
};

class UndefinedConditionalError : public Error {
 public:
  explicit UndefinedConditionalError(const std::string &what)
      : Error(ErrorCategory::Undefined, what) {}
};

}  // namespace toa
