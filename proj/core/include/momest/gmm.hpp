#pragma once

#include <Eigen/Core>

#include "momest/estimate.hpp"
#include "momest/eval.hpp"
#include "momest/optimizer.hpp"
#include "momest/problem.hpp"

namespace momest {

/// Weighting of the quadratic GMM criterion ||F(theta, mu_n)||_M^2.
struct WeightingScheme {
  enum class Kind { Fixed, TwoStep, Cue };

  Kind kind = Kind::TwoStep;
  Eigen::MatrixXd fixed;  // used when kind == Fixed; empty means identity
};

/// Symmetry within 1e-12 relative and smallest eigenvalue > 0.
/// Throws RankError naming the violated condition.
void validate_weight_matrix(const Eigen::MatrixXd& M);

struct GmmOptions {
  BoxOptimizerOptions optimizer;
  bool uncentered_cue = false;  // CUE with Vhat(theta)^{-1} instead of the
                                // centered precision What(theta)
  double condition_cap = 1e12;
};

/// argmin over the box of F(theta)^t M F(theta) for a fixed SPD M.
/// The criterion is normalized by the largest |M| entry before optimization,
/// so the search trajectory is invariant under M -> c M; the reported
/// objective uses M itself. Throws NonConvergenceError when no start
/// converges.
EstimateResult gmm_fixed(const MomentProblem& problem, const Sample& sample,
                         const Eigen::MatrixXd& M, const GmmOptions& options = {});

/// Identity-weighted preliminary pass, then re-estimation with the centered
/// precision What(theta_tilde). Propagates SingularCovarianceError from the
/// preliminary point.
EstimateResult gmm_two_step(const MomentProblem& problem, const Sample& sample,
                            const GmmOptions& options = {});

/// Continuously updated estimator: minimizes F(theta)^t What(theta) F(theta),
/// What re-estimated at every point. Points where the precision is singular
/// get a +inf criterion; throws InfeasibleError when that happens on every
/// multistart seed.
EstimateResult cue(const MomentProblem& problem, const Sample& sample,
                   const GmmOptions& options = {});

/// Dispatch on the weighting scheme. Fixed with an empty matrix means the
/// identity.
EstimateResult gmm_estimate(const MomentProblem& problem, const Sample& sample,
                            const WeightingScheme& scheme,
                            const GmmOptions& options = {});

}  // namespace momest
