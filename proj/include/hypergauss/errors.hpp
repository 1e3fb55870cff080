#pragma once

#include <stdexcept>
#include <string>

namespace hypergauss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside an operation's mathematical domain (p_j <= 0, u outside (0,1), ...).
struct DomainError : Error {
  using Error::Error;
};

// Degree or moment caps exceeded.
struct CapacityError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

// A hypothesis (exponent range, alpha range) is not met.
struct HypothesisError : Error {
  using Error::Error;
};

struct MalformedInput : Error {
  using Error::Error;
};

struct FactorizationError : Error {
  using Error::Error;
};

}  // namespace hypergauss
