#include "momest/gel.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "momest/gmm.hpp"

#include <Eigen/Dense>

namespace momest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double conj_deriv2(const Divergence& div, double y) {
  if (div.f_conj_deriv2) return div.f_conj_deriv2(y);
  double h = 1e-7 * (1.0 + std::abs(y));
  double yp = y + h, ym = y - h;
  if (!div.in_conj_domain(yp)) yp = y;
  if (!div.in_conj_domain(ym)) ym = y;
  if (yp == ym) return 0.0;
  return (div.f_conj_deriv(yp) - div.f_conj_deriv(ym)) / (yp - ym);
}

// Largest step keeping eta + alpha * deta strictly inside (conj_lo, conj_hi).
// The boundary fraction tightens toward 1 as the iteration proceeds so that
// optima with weights concentrated near the domain edge are reached without
// a long geometric crawl.
double max_feasible_step(const Divergence& div, const Eigen::VectorXd& eta,
                         const Eigen::VectorXd& deta, int iteration) {
  const double fraction = iteration < 5 ? 0.995 : 0.99999;
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (deta[i] > 0.0 && std::isfinite(div.conj_hi)) {
      alpha = std::min(alpha, fraction * (div.conj_hi - eta[i]) / deta[i]);
    }
    if (deta[i] < 0.0 && std::isfinite(div.conj_lo)) {
      alpha = std::min(alpha, fraction * (div.conj_lo - eta[i]) / deta[i]);
    }
  }
  return alpha;
}

// Damped Newton for the concave dual, written as minimization of
// psi(lambda) = -l1 + mean f*(l1 + Phi^t l2). `warm` seeds the iteration
// when its eta stays inside the conjugate domain.
DualSolution solve_inner(const Divergence& div, const Eigen::MatrixXd& Phi,
                         const GelOptions& opts,
                         const Eigen::VectorXd* warm) {
  const Eigen::Index k = Phi.rows();
  const Eigen::Index n = Phi.cols();
  const double dn = static_cast<double>(n);

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k + 1);
  if (warm && warm->size() == k + 1) {
    const Eigen::VectorXd eta =
        Eigen::VectorXd::Constant(n, (*warm)[0]) + Phi.transpose() * warm->tail(k);
    bool ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!div.in_conj_domain(eta[i])) {
        ok = false;
        break;
      }
    }
    if (ok) lambda = *warm;
  }

  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, lambda[0]) +
                        Phi.transpose() * lambda.tail(k);
  Eigen::VectorXd fstar(n), w1(n), w2(n);
  const auto fill = [&](const Eigen::VectorXd& e) {
    if (div.f_conj_fused) {
      for (Eigen::Index i = 0; i < n; ++i) {
        div.f_conj_fused(e[i], fstar[i], w1[i], w2[i]);
      }
      return;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      fstar[i] = div.f_conj(e[i]);
      w1[i] = div.f_conj_deriv(e[i]);
      w2[i] = conj_deriv2(div, e[i]);
    }
  };
  fill(eta);
  double psi = -lambda[0] + fstar.mean();

  DualSolution out;
  int iter = 0;
  for (; iter < opts.max_inner_iterations; ++iter) {
    Eigen::VectorXd g(k + 1);
    g[0] = -1.0 + w1.mean();
    g.tail(k) = (Phi * w1) / dn;
    if (g.cwiseAbs().maxCoeff() < opts.inner_tolerance) {
      out.converged = true;
      break;
    }
    if (lambda.norm() > opts.lambda_divergence_norm) {
      throw UnboundedDualError(
          "dual variable diverged: zero is outside the convex hull of the sample moments");
    }

    Eigen::MatrixXd H(k + 1, k + 1);
    H(0, 0) = w2.mean();
    H.block(0, 1, 1, k) = ((Phi * w2) / dn).transpose();
    H.block(1, 0, k, 1) = H.block(0, 1, 1, k).transpose();
    H.block(1, 1, k, k) = (Phi * w2.asDiagonal() * Phi.transpose()) / dn;

    Eigen::VectorXd delta;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(
          H + ridge * Eigen::MatrixXd::Identity(k + 1, k + 1));
      delta = ldlt.solve(-g);
      if (ldlt.info() == Eigen::Success && delta.allFinite() &&
          delta.dot(g) < 0.0) {
        break;
      }
      ridge = (ridge == 0.0) ? 1e-12 * (1.0 + H.trace()) : 10.0 * ridge;
      delta.setZero();
    }
    if (delta.isZero(0.0)) delta = -g;  // last resort: steepest descent

    const Eigen::VectorXd deta =
        Eigen::VectorXd::Constant(n, delta[0]) + Phi.transpose() * delta.tail(k);
    double alpha = max_feasible_step(div, eta, deta, iter);
    const double slope = g.dot(delta);
    bool accepted = false;
    Eigen::VectorXd eta_new;
    double psi_new = 0.0;
    for (int bt = 0; bt < 60 && alpha > 0.0; ++bt) {
      eta_new = eta + alpha * deta;
      bool feasible = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!div.in_conj_domain(eta_new[i])) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += div.f_conj(eta_new[i]);
        psi_new = -(lambda[0] + alpha * delta[0]) + s / dn;
        if (psi_new <= psi + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (g.cwiseAbs().maxCoeff() <= 1e-8) {
        out.converged = true;  // stalled within the contract tolerance
        break;
      }
      throw UnboundedDualError("dual Newton stalled without reaching the optimum");
    }

    lambda += alpha * delta;
    eta = eta_new;
    fill(eta);
    psi = -lambda[0] + fstar.mean();
  }

  if (!out.converged) {
    throw UnboundedDualError("dual Newton hit the iteration cap: constraint set "
                             "likely infeasible at this theta");
  }

  out.lambda1 = lambda[0];
  out.lambda2 = lambda.tail(k);
  out.value = lambda[0] - fstar.mean();
  out.weights = w1 / dn;
  out.iterations = iter;
  return out;
}

}  // namespace

DualSolution inner_dual(const Divergence& div, const MomentProblem& problem,
                        const Eigen::VectorXd& theta, const Sample& sample,
                        const GelOptions& options) {
  const Eigen::MatrixXd Phi = eval_moment_values(problem, theta, sample);
  return solve_inner(div, Phi, options, nullptr);
}

GelEstimate gel_estimate(const MomentProblem& problem, const Sample& sample,
                         const Divergence& div, const GelOptions& options) {
  // The identity-GMM root joins the multistart seeds: on degenerate samples
  // (n close to k+1) the feasible set can shrink to a neighborhood of the
  // moment-map root that no grid point hits.
  BoxOptimizerOptions outer = options.optimizer;
  try {
    GmmOptions preliminary_options;
    preliminary_options.optimizer = options.optimizer;
    const EstimateResult preliminary = gmm_fixed(
        problem, sample, Eigen::MatrixXd::Identity(problem.k, problem.k),
        preliminary_options);
    outer.extra_seeds.push_back(preliminary.theta_hat);
  } catch (const Error&) {
    // No usable preliminary point; the grid seeds stand alone.
  }

  // Warm start shared across the (sequential, deterministic) outer search.
  struct Cache {
    Eigen::VectorXd lambda;
    bool valid = false;
  } cache;

  const auto inner_at =
      [&](const Eigen::VectorXd& theta) -> std::optional<DualSolution> {
    const Eigen::MatrixXd Phi = eval_moment_values(problem, theta, sample);
    try {
      DualSolution sol =
          solve_inner(div, Phi, options, cache.valid ? &cache.lambda : nullptr);
      cache.lambda.resize(problem.k + 1);
      cache.lambda[0] = sol.lambda1;
      cache.lambda.tail(problem.k) = sol.lambda2;
      cache.valid = true;
      return sol;
    } catch (const UnboundedDualError&) {
      cache.valid = false;
      return std::nullopt;
    }
  };

  const ObjectiveFn f = [&](const Eigen::VectorXd& theta) {
    const auto sol = inner_at(theta);
    return sol ? sol->value : kInf;
  };

  // Envelope gradient: -(sum_i p_i dphi_i) lambda2 at the inner optimum.
  const GradientFn grad = [&](const Eigen::VectorXd& theta) {
    const auto sol = inner_at(theta);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(problem.d);
    if (!sol) return g;
    const Eigen::MatrixXd jac_values = eval_jacobian_values(problem, theta, sample);
    const Eigen::VectorXd weighted_flat = jac_values * sol->weights;
    const Eigen::Map<const Eigen::MatrixXd> weighted_jac(weighted_flat.data(),
                                                         problem.d, problem.k);
    g = -(weighted_jac * sol->lambda2);
    return g;
  };

  const BoxOptimum opt = minimize_over_box(problem.theta_box, f, grad, outer);

  GelEstimate out;
  out.dual = inner_dual(div, problem, opt.theta, sample, options);
  out.result.theta_hat = opt.theta;
  out.result.objective = std::max(0.0, out.dual.value);
  out.result.converged = opt.converged && out.dual.converged;
  out.result.iterations = opt.iterations;
  out.result.gradient_norm = opt.projected_gradient_norm;
  out.result.gel_weights = out.dual.weights;
  if (!opt.any_converged) {
    throw NonConvergenceError("no multistart refinement converged", out.result);
  }
  return out;
}

}  // namespace momest
