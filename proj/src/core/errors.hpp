#pragma once

#include <stdexcept>
#include <string>

namespace evi {

// Thrown when an iterative solver fails to converge (cycling, max_iter).
// Callers are expected to fall back to the projected-gradient path.
class SolverFailure : public std::runtime_error {
public:
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a computed quantity is numerically inconsistent
// (negative norm radicand, singular factorization, NaN).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace evi
