// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ctxtraj {

/// Failure raised by any module. `what()` reads "<module>: <message>", the
/// form the command-line tool prints after "error: ".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

/// A primitive produced NaN or Inf. Aborts the current training step.
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& message) : Error("diffcore", message) {}
};

}  // namespace ctxtraj
