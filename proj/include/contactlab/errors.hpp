#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace contactlab {

/// Base class for all numerical errors raised by the library.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularChart : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IncompatibleJ : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LeftChartDomain : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, int iterations, double residual,
                std::vector<double> history = {})
      : NumericalError(what + " (iterations=" + std::to_string(iterations) +
                       ", residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual),
        history_(std::move(history)) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }
  const std::vector<double>& history() const { return history_; }

 private:
  int iterations_;
  double residual_;
  std::vector<double> history_;
};

class NotContact : public NumericalError {
 public:
  NotContact(const std::string& what, double radius)
      : NumericalError(what), radius_(radius) {}
  double radius() const { return radius_; }

 private:
  double radius_;
};

class BadBlocks : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AsymmetricHessian : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class HypothesisViolated : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OutOfRange : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ResolutionTooCoarse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ModeMismatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientDecay : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OutsideTube : public NumericalError {
 public:
  OutsideTube(const std::string& what, double distance)
      : NumericalError(what), distance_(distance) {}
  double distance() const { return distance_; }

 private:
  double distance_;
};

/// Malformed or invalid scenario input. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace contactlab
