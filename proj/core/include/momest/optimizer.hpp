#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace momest {

struct BoxOptimizerOptions {
  int grid_points_per_dim = 9;      // multistart seeds per coordinate
  int max_iterations = 200;         // refinement iterations per start
  double gradient_tolerance = 1e-9; // on the projected gradient norm
  double armijo_c1 = 1e-4;
  int max_backtracks = 60;
  // Additional start points refined after the grid (clamped to the box).
  std::vector<Eigen::VectorXd> extra_seeds;
};

struct BoxOptimum {
  Eigen::VectorXd theta;
  double value = 0.0;
  double projected_gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;       // the winning start converged
  bool any_converged = false;   // at least one start converged
  int feasible_starts = 0;      // seeds with a finite objective
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Multistart minimization over a coordinate box: a uniform grid of seeds
/// (endpoints included), each refined by projected BFGS with Armijo
/// backtracking. Fully deterministic; ties between starts are broken by
/// lower value, then lexicographically smaller theta. The objective may
/// return +inf to mark infeasible points; throws InfeasibleError when every
/// seed is infeasible.
BoxOptimum minimize_over_box(const Eigen::MatrixX2d& box, const ObjectiveFn& f,
                             const GradientFn& grad,
                             const BoxOptimizerOptions& options = {});

/// The multistart seed grid used by minimize_over_box, in evaluation order.
std::vector<Eigen::VectorXd> box_seed_grid(const Eigen::MatrixX2d& box,
                                           int points_per_dim);

}  // namespace momest
