#include "momest/optimizer.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "momest/errors.hpp"

namespace momest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(double v) { return std::isnan(v) ? kInf : v; }

Eigen::VectorXd clamp(const Eigen::MatrixX2d& box, const Eigen::VectorXd& theta) {
  Eigen::VectorXd out = theta;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    out[j] = std::min(std::max(out[j], box(j, 0)), box(j, 1));
  }
  return out;
}

// Gradient with ascent components blocked at active bounds.
Eigen::VectorXd projected_gradient(const Eigen::MatrixX2d& box,
                                   const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& g) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (theta[j] <= box(j, 0) && g[j] > 0.0) pg[j] = 0.0;
    if (theta[j] >= box(j, 1) && g[j] < 0.0) pg[j] = 0.0;
  }
  return pg;
}

struct Refinement {
  Eigen::VectorXd theta;
  double value = kInf;
  double pg_norm = kInf;
  int iterations = 0;
  bool converged = false;
};

Refinement refine(const Eigen::MatrixX2d& box, const ObjectiveFn& f,
                  const GradientFn& grad, Eigen::VectorXd theta, double value,
                  const BoxOptimizerOptions& opts) {
  const Eigen::Index d = theta.size();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd g = grad(theta);

  Refinement out;
  out.theta = theta;
  out.value = value;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const Eigen::VectorXd pg = projected_gradient(box, theta, g);
    out.pg_norm = pg.norm();
    if (out.pg_norm < opts.gradient_tolerance) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd dir = -(H * g);
    double slope = dir.dot(g);
    if (!(slope < -1e-14 * dir.norm() * g.norm()) || !dir.allFinite()) {
      // Not a usable descent direction; restart from steepest descent.
      H.setIdentity();
      dir = -g;
      slope = dir.dot(g);
    }

    // Backtracking with projection onto the box.
    double alpha = 1.0;
    Eigen::VectorXd theta_new;
    double value_new = kInf;
    bool accepted = false;
    for (int bt = 0; bt < opts.max_backtracks; ++bt) {
      theta_new = clamp(box, theta + alpha * dir);
      const Eigen::VectorXd step = theta_new - theta;
      if (step.isZero(0.0)) break;  // direction points out of the box
      const double m = g.dot(step);
      if (m < 0.0) {
        value_new = guarded(f(theta_new));
        if (value_new <= value + opts.armijo_c1 * m) {
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd g_new = grad(theta_new);
    const Eigen::VectorXd s = theta_new - theta;
    const Eigen::VectorXd y = g_new - g;
    const double ys = y.dot(s);
    if (ys > 1e-12 * y.norm() * s.norm() && y.allFinite()) {
      const double rho = 1.0 / ys;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
      const Eigen::MatrixXd W = I - rho * s * y.transpose();
      H = W * H * W.transpose() + rho * s * s.transpose();
    }
    theta = theta_new;
    value = value_new;
    g = g_new;
    out.theta = theta;
    out.value = value;
  }

  // Final projected gradient at the resting point.
  const Eigen::VectorXd pg = projected_gradient(box, theta, g);
  out.pg_norm = pg.norm();
  if (out.pg_norm < opts.gradient_tolerance) out.converged = true;
  out.iterations = iter;
  return out;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] < b[j]) return true;
    if (a[j] > b[j]) return false;
  }
  return false;
}

}  // namespace

std::vector<Eigen::VectorXd> box_seed_grid(const Eigen::MatrixX2d& box,
                                           int points_per_dim) {
  const Eigen::Index d = box.rows();
  std::vector<std::vector<double>> axes(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double lo = box(j, 0), hi = box(j, 1);
    if (points_per_dim <= 1 || hi <= lo) {
      axes[j] = {0.5 * (lo + hi)};
    } else {
      for (int i = 0; i < points_per_dim; ++i) {
        axes[j].push_back(lo + (hi - lo) * static_cast<double>(i) /
                                   static_cast<double>(points_per_dim - 1));
      }
    }
  }
  std::vector<Eigen::VectorXd> seeds;
  Eigen::VectorXd point(d);
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    for (Eigen::Index j = 0; j < d; ++j) point[j] = axes[j][idx[j]];
    seeds.push_back(point);
    // Advance, last coordinate fastest.
    Eigen::Index j = d - 1;
    for (;; --j) {
      if (++idx[j] < axes[j].size()) break;
      idx[j] = 0;
      if (j == 0) return seeds;
    }
  }
}

BoxOptimum minimize_over_box(const Eigen::MatrixX2d& box, const ObjectiveFn& f,
                             const GradientFn& grad,
                             const BoxOptimizerOptions& options) {
  if (box.rows() < 1) throw Error("empty parameter box");
  auto seeds = box_seed_grid(box, options.grid_points_per_dim);
  for (const auto& extra : options.extra_seeds) {
    if (extra.size() == box.rows()) seeds.push_back(clamp(box, extra));
  }

  BoxOptimum best;
  bool have_best = false;
  bool any_converged = false;
  int feasible_starts = 0;
  for (const auto& seed : seeds) {
    const double seed_value = guarded(f(seed));
    if (!std::isfinite(seed_value)) continue;
    ++feasible_starts;

    const Refinement r = refine(box, f, grad, seed, seed_value, options);
    any_converged = any_converged || r.converged;

    const bool better = !have_best || r.value < best.value ||
                        (r.value == best.value && lex_less(r.theta, best.theta));
    if (better) {
      best.theta = r.theta;
      best.value = r.value;
      best.projected_gradient_norm = r.pg_norm;
      best.iterations = r.iterations;
      best.converged = r.converged;
      have_best = true;
    }
  }

  if (!have_best) {
    throw InfeasibleError("objective is infinite at every multistart seed");
  }
  best.any_converged = any_converged;
  best.feasible_starts = feasible_starts;
  return best;
}

}  // namespace momest
