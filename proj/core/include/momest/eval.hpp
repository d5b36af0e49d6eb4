#pragma once

#include <Eigen/Core>

#include "momest/problem.hpp"

namespace momest {

/// Empirical moment F(theta, mu_n) = (1/n) sum_i phi(theta, X_i).
/// Summation is pairwise in a fixed left-to-right order, so identical inputs
/// give bit-identical output. Throws EvaluationError on a non-finite value.
Eigen::VectorXd eval_moment(const MomentProblem& problem,
                            const Eigen::VectorXd& theta, const Sample& sample);

/// Empirical mean Jacobian Dhat(theta) = (1/n) sum_i dphi(theta, X_i), d x k.
Eigen::MatrixXd eval_jacobian(const MomentProblem& problem,
                              const Eigen::VectorXd& theta,
                              const Sample& sample);

/// k x n matrix with phi(theta, X_i) in column i.
Eigen::MatrixXd eval_moment_values(const MomentProblem& problem,
                                   const Eigen::VectorXd& theta,
                                   const Sample& sample);

/// (d*k) x n matrix with the column-major-flattened dphi(theta, X_i) in
/// column i.
Eigen::MatrixXd eval_jacobian_values(const MomentProblem& problem,
                                     const Eigen::VectorXd& theta,
                                     const Sample& sample);

/// Empirical second moment Vhat(theta) = (1/n) sum_i phi phi^t, k x k,
/// symmetric positive semidefinite.
Eigen::MatrixXd eval_second_moment(const MomentProblem& problem,
                                   const Eigen::VectorXd& theta,
                                   const Sample& sample);

/// Mean and second moment from a single pass over the sample.
struct MomentSummary {
  Eigen::VectorXd mean;           // F(theta, mu_n)
  Eigen::MatrixXd second_moment;  // Vhat(theta)

  Eigen::MatrixXd centered_covariance() const;
};

MomentSummary eval_moment_summary(const MomentProblem& problem,
                                  const Eigen::VectorXd& theta,
                                  const Sample& sample);

/// What(theta) = [Vhat(theta) - F F^t]^{-1} by symmetric eigendecomposition.
/// Throws SingularCovarianceError (carrying the smallest eigenvalue) when the
/// centered covariance is not positive definite or its condition number
/// exceeds `condition_cap`.
Eigen::MatrixXd eval_centered_precision(const MomentProblem& problem,
                                        const Eigen::VectorXd& theta,
                                        const Sample& sample,
                                        double condition_cap = 1e12);

/// Inverse of a symmetric positive definite matrix via eigendecomposition,
/// re-symmetrized. Throws SingularCovarianceError under the same conditions
/// as eval_centered_precision. `what` names the matrix in error messages.
Eigen::MatrixXd spd_inverse_capped(const Eigen::MatrixXd& matrix,
                                   double condition_cap, const char* what);

}  // namespace momest
