#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "momest/errors.hpp"

namespace momest {

/// i.i.d. observations, one per row.
struct Sample {
  Eigen::MatrixXd observations;  // n x q

  Eigen::Index n() const { return observations.rows(); }
  Eigen::Index dim() const { return observations.cols(); }
};

using MomentFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& theta,
                                               const Eigen::VectorXd& x)>;
// d x k matrix, row j = d phi / d theta_j.
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& theta,
                                                 const Eigen::VectorXd& x)>;
// Vectorized forms over a whole sample (one observation per row): k x n
// moment values, and (d*k) x n column-major-flattened Jacobians. Optional;
// must agree with the per-point functions.
using BatchMomentFn = std::function<Eigen::MatrixXd(
    const Eigen::VectorXd& theta, const Eigen::MatrixXd& observations)>;
using BatchJacobianFn = std::function<Eigen::MatrixXd(
    const Eigen::VectorXd& theta, const Eigen::MatrixXd& observations)>;
using SamplerFn = std::function<Sample(std::uint64_t seed, Eigen::Index n)>;

/// Moment-condition model: theta0 is the zero of theta -> E[phi(theta, X)]
/// over a compact coordinate box. Integrability of phi and its derivatives
/// is a documented precondition, not a runtime check.
struct MomentProblem {
  Eigen::Index d = 0;      // parameter dimension
  Eigen::Index k = 0;      // moment dimension, k >= d
  Eigen::Index x_dim = 0;  // observation dimension q
  Eigen::MatrixX2d theta_box;  // d rows of [lo, hi]
  MomentFn phi;
  JacobianFn dphi;
  BatchMomentFn phi_batch;     // optional fast path
  BatchJacobianFn dphi_batch;  // optional fast path
  std::optional<Eigen::VectorXd> true_theta;
  SamplerFn sampler;  // may be null

  // Population moments of phi at true_theta when known in closed form;
  // used by bound reports instead of a plug-in draw.
  std::optional<Eigen::MatrixXd> analytic_jacobian;       // D, d x k
  std::optional<Eigen::MatrixXd> analytic_second_moment;  // V, k x k

  bool in_box(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd box_center() const;
};

/// Structural checks (k >= d, bounded box, true_theta interior), a
/// finite-difference probe of dphi against phi at random interior points
/// (relative error < 1e-6), and, when a sampler and true_theta are present,
/// a statistical check that the sample mean of phi(theta0, .) is near zero
/// on a large draw. Throws momest::Error on the first violation.
void validate_problem(const MomentProblem& problem,
                      std::uint64_t seed = 0x5eed, int probes = 100);

/// Built-in registry. "normal-mean": X ~ N(1, 1), Theta = [-3, 3],
/// phi(theta, x) = (x - theta, x^2 - theta^2 - 1). "mean-1d": the exactly
/// identified toy phi(theta, x) = x - theta on the same sampler.
const MomentProblem& get_problem(const std::string& id);
std::vector<std::string> registered_problems();
void register_problem(const std::string& id, MomentProblem problem);

}  // namespace momest
