#pragma once

#include <stdexcept>
#include <string>

namespace sturm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: malformed files, violated preconditions, q < 1.
/// The CLI maps this family to exit code 2.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ArgumentOrderError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class InvalidWindowError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class DomainError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class PotentialAuditError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class InvalidProbeError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class SamplingError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The Green kernel derivative jumps by -1 across the diagonal.
class DiagonalError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Something that cannot happen for an admissible potential did happen.
class InternalFault : public Error {
 public:
  using Error::Error;
};

/// A tolerance could not be reached. Carries the worst observed residual.
class RefinementFailure : public Error {
 public:
  RefinementFailure(const std::string& what, double worst_residual)
      : Error(what + " (worst residual " + std::to_string(worst_residual) +
              ")"),
        worst_residual_(worst_residual) {}

  double worst_residual() const noexcept { return worst_residual_; }

 private:
  double worst_residual_;
};

}  // namespace sturm
