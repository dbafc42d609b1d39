#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace mcrm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: wrong dimension, parameter out of range, unknown name.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A configuration asks for something the problem cannot provide
/// (e.g. analytic Hessians on a problem that has none).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// An objective returned a non-finite value. Carries the objective index and
/// the point (for finite differences, the stencil point) that was evaluated.
class EvaluationFailure : public Error {
 public:
  EvaluationFailure(int objective, Vector point, const std::string& what)
      : Error(what), objective_(objective), point_(std::move(point)) {}

  int objective() const { return objective_; }
  const Vector& point() const { return point_; }

 private:
  int objective_;
  Vector point_;
};

/// Finite-difference step collapsed to zero (zero displacement and no floor).
class DegenerateStep : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mcrm
