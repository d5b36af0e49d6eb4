#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace momest {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A moment function returned a non-finite value during an empirical
/// evaluation. Carries the parameter and the offending observation index.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Eigen::VectorXd theta,
                  Eigen::Index observation)
      : Error(what), theta_(std::move(theta)), observation_(observation) {}

  const Eigen::VectorXd& theta() const noexcept { return theta_; }
  Eigen::Index observation() const noexcept { return observation_; }

 private:
  Eigen::VectorXd theta_;
  Eigen::Index observation_;
};

/// Centered covariance of the moments is singular or its condition number
/// exceeds the configured cap.
class SingularCovarianceError : public Error {
 public:
  SingularCovarianceError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_ = 0.0;
};

/// Argument outside the domain of a divergence or its convex conjugate.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Dual problem has no finite supremum (zero is outside the convex hull of
/// the sample moments), detected by lambda blow-up or iteration cap.
class UnboundedDualError : public Error {
 public:
  using Error::Error;
};

/// Criterion is infinite on all of the parameter box.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A matrix fails a rank or positive-definiteness requirement; the message
/// names the offending matrix.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Mismatched matrix dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Unknown id in a problem / divergence / perturbation-family registry.
class RegistryError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration; `field()` names the bad entry.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace momest
