#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace xltrack {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Physically or mathematically meaningless argument (negative variance,
// zero wavelength, out-of-range probability, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Tensor / matrix dimension mismatch. Message always carries the offending
// shapes so a failure is diagnosable from the what() string alone.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Numerical failure at runtime: eigensolver did not converge, loss went
// non-finite, matrix inversion on singular input, ...
class NumericError : public Error {
 public:
  using Error::Error;
};

// File / stream problems for datasets, checkpoints and reports.
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration. Collects every issue found during
// validation so the user can fix all of them in one pass.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  explicit ConfigError(const std::string& issue)
      : ConfigError(std::vector<std::string>{issue}) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& s : issues) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace xltrack
