#pragma once

#include <stdexcept>
#include <string>

namespace abreu {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad arguments or violated preconditions.  The CLI maps these to exit code 2.
struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// fn(lo) and fn(hi) have the same sign.
struct NoBracket : Error {
  explicit NoBracket(const std::string& msg) : Error(msg) {}
};

// Adaptive quadrature hit max_depth without meeting tolerance, or the
// integrand produced a non-finite value.
struct QuadratureFailure : Error {
  explicit QuadratureFailure(const std::string& msg) : Error(msg) {}
};

// A solver diverged, stagnated, or produced an inadmissible state.
// The CLI maps these to exit code 1.
struct SolveFailure : Error {
  explicit SolveFailure(const std::string& msg) : Error(msg) {}
};

}  // namespace abreu
