#pragma once

#include <Eigen/Core>

#include "momest/divergence.hpp"
#include "momest/estimate.hpp"
#include "momest/eval.hpp"
#include "momest/optimizer.hpp"
#include "momest/problem.hpp"

namespace momest {

/// Solution of the inner dual
///   sup_{l1, l2}  l1 - (1/n) sum_i f*(l1 + l2^t phi(theta, X_i)).
/// At the optimum the implied weights p_i = f*'(l1 + l2^t phi_i) / n sum to
/// one and annihilate the sample moments.
struct DualSolution {
  double lambda1 = 0.0;
  Eigen::VectorXd lambda2;
  double value = 0.0;       // dual objective == divergence of the projection
  Eigen::VectorXd weights;  // p_1..p_n
  bool converged = false;
  int iterations = 0;
};

struct GelOptions {
  BoxOptimizerOptions optimizer;     // outer search over theta
  double inner_tolerance = 1e-11;    // sup-norm of the dual gradient
  int max_inner_iterations = 500;
  double lambda_divergence_norm = 1e8;
};

/// Damped Newton on (l1, l2) from l1 = 0, l2 = 0, with backtracking that
/// keeps every argument of f* inside the conjugate domain. Throws
/// UnboundedDualError when ||lambda|| exceeds `lambda_divergence_norm` or
/// the iteration cap is hit (zero outside the hull of the sample moments).
DualSolution inner_dual(const Divergence& div, const MomentProblem& problem,
                        const Eigen::VectorXd& theta, const Sample& sample,
                        const GelOptions& options = {});

struct GelEstimate {
  EstimateResult result;
  DualSolution dual;  // at theta_hat
};

/// Outer minimization of theta -> inner_dual(...).value with the same
/// multistart scheme as the GMM estimators (infeasible theta get +inf).
/// Throws InfeasibleError when every multistart seed is infeasible.
GelEstimate gel_estimate(const MomentProblem& problem, const Sample& sample,
                         const Divergence& div, const GelOptions& options = {});

}  // namespace momest
