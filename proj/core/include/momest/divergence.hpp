#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "momest/errors.hpp"

namespace momest {

using ScalarFn = std::function<double(double)>;

/// f-divergence generator: strictly convex f with f(1) = f'(1) = 0, together
/// with its convex conjugate f*(y) = sup_x { x y - f(x) } on the open
/// interval (conj_lo, conj_hi). Consequently f*(0) = 0 and f*'(0) = 1.
struct Divergence {
  std::string id;

  ScalarFn f;  // defined on [f_domain_min, inf), open end if f_domain_open
  double f_domain_min = -std::numeric_limits<double>::infinity();
  bool f_domain_open = false;

  ScalarFn f_conj;
  ScalarFn f_conj_deriv;
  ScalarFn f_conj_deriv2;  // optional; the dual Newton solver falls back to
                           // differencing f_conj_deriv when absent
  // Optional fused evaluation of (f*, f*', f*'') sharing one transcendental
  // call; must agree with the individual functions. Used by the dual solver.
  std::function<void(double y, double& value, double& deriv, double& deriv2)>
      f_conj_fused;
  double conj_lo = -std::numeric_limits<double>::infinity();
  double conj_hi = std::numeric_limits<double>::infinity();

  bool in_f_domain(double x) const noexcept;
  bool in_conj_domain(double y) const noexcept;
};

/// f*(y). Throws DomainError when y is outside (conj_lo, conj_hi).
double conjugate(const Divergence& div, double y);

/// (1/n) sum_i f(n p_i): the divergence of sum_i p_i delta_{X_i} from the
/// uniform empirical measure. Weights are expected nonnegative with sum 1;
/// throws DomainError when any n p_i leaves the domain of f.
double divergence_value(const Divergence& div, const Eigen::VectorXd& weights);

/// Checks f(1) = f'(1) = 0, f*(0) = 0, f*'(0) = 1, midpoint convexity of
/// f_conj on a grid, and f_conj_deriv against finite differences of f_conj
/// (relative error < 1e-8). Throws momest::Error on the first violation.
void validate_divergence(const Divergence& div);

/// Registry. Built in: "el" (empirical likelihood, f(x) = -log x + x - 1),
/// "et" (exponential tilting, f(x) = x log x - x + 1), "euclidean"
/// (f(x) = (x-1)^2 / 2, the CUE link).
const Divergence& get_divergence(const std::string& id);
std::vector<std::string> registered_divergences();

/// User divergences are accepted only if validate_divergence passes.
void register_divergence(Divergence div);

}  // namespace momest
