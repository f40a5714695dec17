#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlborn {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Fields, grids or argument lists that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A boundary mollifier narrower than the grid can represent.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Solve requested on an operator whose wavenumber hits a Neumann eigenvalue.
class SingularOperatorError : public Error {
 public:
  SingularOperatorError(const std::string& what, double sigma_min)
      : Error(what), sigma_min_(sigma_min) {}
  double sigma_min() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};

// Fixed-point iteration that did not reach its tolerance.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  // Residual sup-norm after each iteration.
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

// Truncated SVD left nothing above the cutoff.
class DegenerateRegularizerError : public Error {
 public:
  using Error::Error;
};

// A bound that must hold by construction was exceeded.
class BoundViolationError : public Error {
 public:
  using Error::Error;
};

// Persisted artifacts that belong to a different configuration.
class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlborn
