#include "momest/gmm.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

namespace momest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EstimateResult result_from(const BoxOptimum& opt) {
  EstimateResult r;
  r.theta_hat = opt.theta;
  r.converged = opt.converged;
  r.iterations = opt.iterations;
  r.gradient_norm = opt.projected_gradient_norm;
  return r;
}

// What(theta), or nullopt when the covariance is singular / ill-conditioned.
std::optional<Eigen::MatrixXd> try_precision(const MomentSummary& ms,
                                             bool uncentered, double cap) {
  try {
    if (uncentered) {
      return spd_inverse_capped(ms.second_moment, cap, "moment second moment");
    }
    return spd_inverse_capped(ms.centered_covariance(), cap,
                              "centered moment covariance");
  } catch (const SingularCovarianceError&) {
    return std::nullopt;
  }
}

}  // namespace

void validate_weight_matrix(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() < 1) {
    throw RankError("weighting matrix M must be square");
  }
  const double scale = M.norm();
  if ((M - M.transpose()).norm() >= 1e-12 * scale) {
    throw RankError("weighting matrix M is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues()[0] > 0.0)) {
    throw RankError("weighting matrix M is not positive definite");
  }
}

EstimateResult gmm_fixed(const MomentProblem& problem, const Sample& sample,
                         const Eigen::MatrixXd& M, const GmmOptions& options) {
  if (M.rows() != problem.k || M.cols() != problem.k) {
    throw DimensionError("weighting matrix must be k x k");
  }
  validate_weight_matrix(M);

  // Normalize the criterion scale so the search trajectory is invariant
  // under M -> c M; the reported objective uses M itself.
  const double scale = M.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd Mn = M / scale;

  const ObjectiveFn f = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd F = eval_moment(problem, theta, sample);
    return std::max(0.0, F.dot(Mn * F));
  };
  const GradientFn grad = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd F = eval_moment(problem, theta, sample);
    const Eigen::MatrixXd D = eval_jacobian(problem, theta, sample);
    return (2.0 * (D * (Mn * F))).eval();
  };

  const BoxOptimum opt = minimize_over_box(problem.theta_box, f, grad, options.optimizer);

  EstimateResult r = result_from(opt);
  const Eigen::VectorXd F = eval_moment(problem, r.theta_hat, sample);
  r.objective = std::max(0.0, F.dot(M * F));
  r.weighting_used = M;
  if (!opt.any_converged) {
    throw NonConvergenceError("no multistart refinement converged", r);
  }
  return r;
}

EstimateResult gmm_two_step(const MomentProblem& problem, const Sample& sample,
                            const GmmOptions& options) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(problem.k, problem.k);
  const EstimateResult preliminary = gmm_fixed(problem, sample, I, options);
  const Eigen::MatrixXd W = eval_centered_precision(
      problem, preliminary.theta_hat, sample, options.condition_cap);
  return gmm_fixed(problem, sample, W, options);
}

EstimateResult cue(const MomentProblem& problem, const Sample& sample,
                   const GmmOptions& options) {
  const auto criterion = [&](const Eigen::VectorXd& theta)
      -> std::optional<std::pair<double, Eigen::MatrixXd>> {
    const MomentSummary ms = eval_moment_summary(problem, theta, sample);
    const auto W = try_precision(ms, options.uncentered_cue, options.condition_cap);
    if (!W) return std::nullopt;
    return std::make_pair(std::max(0.0, ms.mean.dot(*W * ms.mean)), *W);
  };

  const ObjectiveFn f = [&](const Eigen::VectorXd& theta) {
    const auto c = criterion(theta);
    return c ? c->first : kInf;
  };

  // Chain-rule gradient 2 Dhat W F plus the W-derivative term by central
  // differences of W with F held fixed.
  const GradientFn grad = [&](const Eigen::VectorXd& theta) {
    const MomentSummary ms = eval_moment_summary(problem, theta, sample);
    const auto W = try_precision(ms, options.uncentered_cue, options.condition_cap);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(problem.d);
    if (!W) return g;
    const Eigen::MatrixXd D = eval_jacobian(problem, theta, sample);
    g = 2.0 * (D * (*W * ms.mean));

    const double h0 = std::cbrt(2.2e-16);
    for (Eigen::Index j = 0; j < problem.d; ++j) {
      const double h = h0 * std::max(1.0, std::abs(theta[j]));
      Eigen::VectorXd tp = theta, tm = theta;
      tp[j] += h;
      tm[j] -= h;
      const auto Wp = try_precision(eval_moment_summary(problem, tp, sample),
                                    options.uncentered_cue, options.condition_cap);
      const auto Wm = try_precision(eval_moment_summary(problem, tm, sample),
                                    options.uncentered_cue, options.condition_cap);
      if (Wp && Wm) {
        g[j] += ms.mean.dot(((*Wp - *Wm) / (2.0 * h)) * ms.mean);
      } else if (Wp) {
        g[j] += ms.mean.dot(((*Wp - *W) / h) * ms.mean);
      } else if (Wm) {
        g[j] += ms.mean.dot(((*W - *Wm) / h) * ms.mean);
      }
    }
    return g;
  };

  const BoxOptimum opt = minimize_over_box(problem.theta_box, f, grad, options.optimizer);

  EstimateResult r = result_from(opt);
  const auto final_criterion = criterion(opt.theta);
  if (!final_criterion) {
    throw SingularCovarianceError("centered covariance singular at the CUE solution", 0.0);
  }
  r.objective = final_criterion->first;
  r.weighting_used = final_criterion->second;
  if (!opt.any_converged) {
    throw NonConvergenceError("no multistart refinement converged", r);
  }
  return r;
}

EstimateResult gmm_estimate(const MomentProblem& problem, const Sample& sample,
                            const WeightingScheme& scheme,
                            const GmmOptions& options) {
  switch (scheme.kind) {
    case WeightingScheme::Kind::Fixed: {
      const Eigen::MatrixXd M =
          scheme.fixed.size() > 0
              ? scheme.fixed
              : Eigen::MatrixXd::Identity(problem.k, problem.k);
      return gmm_fixed(problem, sample, M, options);
    }
    case WeightingScheme::Kind::TwoStep:
      return gmm_two_step(problem, sample, options);
    case WeightingScheme::Kind::Cue:
      return cue(problem, sample, options);
  }
  throw Error("unreachable weighting scheme");
}

}  // namespace momest
