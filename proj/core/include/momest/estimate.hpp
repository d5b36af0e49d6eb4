#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "momest/errors.hpp"

namespace momest {

/// Output of one estimation run. `gradient_norm` is the projected gradient
/// norm of the criterion as minimized (fixed-weight criteria are scale
/// normalized internally, see gmm_fixed).
struct EstimateResult {
  Eigen::VectorXd theta_hat;
  double objective = 0.0;
  Eigen::MatrixXd weighting_used;  // k x k matrix applied at the solution;
                                   // empty for GEL estimates
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::optional<Eigen::VectorXd> gel_weights;  // implied weights at theta_hat
};

/// No multistart refinement converged; carries the best result found.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, EstimateResult best)
      : Error(what), best_(std::move(best)) {}

  const EstimateResult& best() const noexcept { return best_; }

 private:
  EstimateResult best_;
};

}  // namespace momest
