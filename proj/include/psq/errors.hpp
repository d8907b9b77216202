#pragma once

#include <stdexcept>
#include <string>

namespace psq {

// Error taxonomy shared by all modules. Exit-code mapping in the CLI:
// DomainError -> 2, ConvergenceError (and its kin) -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& msg) : Error(msg) {}
};

// No sign change on the initial root bracket.
class BracketError : public ConvergenceError {
 public:
  explicit BracketError(const std::string& msg) : ConvergenceError(msg) {}
};

// Phase unwrapping detected an ambiguous jump between adjacent contour nodes.
class BranchError : public ConvergenceError {
 public:
  explicit BranchError(const std::string& msg) : ConvergenceError(msg) {}
};

// (eta, sigma) not in the requested asymptotic branch region.
class RegionError : public DomainError {
 public:
  explicit RegionError(const std::string& msg) : DomainError(msg) {}
};

// A traced ray left the numerical window.
class IntegrationError : public ConvergenceError {
 public:
  explicit IntegrationError(const std::string& msg) : ConvergenceError(msg) {}
};

}  // namespace psq
