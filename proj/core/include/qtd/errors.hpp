#pragma once

#include <stdexcept>
#include <string>

namespace qtd {

// Operation applied to a state carrying the wrong representation tag.
struct RepresentationError : std::logic_error {
  using std::logic_error::logic_error;
};

struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Mass reached the guard band; periodic wrap-around would corrupt the result.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// State violates a momentum floor or another domain requirement of an operator.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct DegenerateModel : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FidelityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace qtd
