#ifndef FLATCAP_ERRORS_HPP
#define FLATCAP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flatcap {

// Argument outside the domain of a formula (e.g. v3 <= -g for the input map).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Problem size beyond what an enumeration routine accepts.
class SizeError : public std::length_error {
 public:
  explicit SizeError(const std::string& what) : std::length_error(what) {}
};

// Affinely dependent / flat input where a full-dimensional body is required.
class DegenerateError : public std::runtime_error {
 public:
  explicit DegenerateError(const std::string& what) : std::runtime_error(what) {}
};

// No strictly feasible starting point for the zonotope scaling problem.
class InfeasibleStart : public std::runtime_error {
 public:
  explicit InfeasibleStart(const std::string& what) : std::runtime_error(what) {}
};

// Optimizer finished but its solution violates the feasibility tolerance.
class ToleranceError : public std::runtime_error {
 public:
  explicit ToleranceError(const std::string& what) : std::runtime_error(what) {}
};

// Linear system / interpolation problem could not be solved.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Closed-loop run aborted because the controller fell back too often.
class FallbackLimitExceeded : public SolverError {
 public:
  explicit FallbackLimitExceeded(const std::string& what) : SolverError(what) {}
};

// Invalid user-supplied configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace flatcap

#endif  // FLATCAP_ERRORS_HPP
