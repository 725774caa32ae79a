#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ggflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonPositivePi : public Error {
 public:
  using Error::Error;
};

class NegativeRate : public Error {
 public:
  using Error::Error;
};

class NegativeMass : public Error {
 public:
  using Error::Error;
};

/// Raised when pi[i]*kappa[i][j] and pi[j]*kappa[j][i] disagree beyond tolerance.
class DetailedBalanceViolation : public Error {
 public:
  DetailedBalanceViolation(std::size_t from, std::size_t to, double relative_error);
  std::size_t from;
  std::size_t to;
  double relative_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class UnsupportedParameter : public Error {
 public:
  using Error::Error;
};

class NonConcaveAlpha : public Error {
 public:
  using Error::Error;
};

class ContinuityEquationViolated : public Error {
 public:
  ContinuityEquationViolated(double residual, double tolerance);
  double residual;
  double tolerance;
};

class StepSizeUnderflow : public Error {
 public:
  StepSizeUnderflow(double time, double step, std::vector<double> state);
  double time;
  double step;
  std::vector<double> state;
};

class NonFiniteField : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

/// The convex solver did not reach its KKT tolerance; carries the best iterate's value.
class SolverStalled : public Error {
 public:
  SolverStalled(const std::string& what, double best_value, double kkt_residual);
  double best_value;
  double kkt_residual;
};

class SingularLaplacian : public Error {
 public:
  SingularLaplacian(std::vector<std::vector<std::size_t>> components);
  std::vector<std::vector<std::size_t>> components;
};

class Disconnected : public Error {
 public:
  using Error::Error;
};

}  // namespace ggflow
