#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "momest/gmm.hpp"

namespace momest {

/// Level index standing for "no approximation": phi_m reproduces the base
/// constraint function bit for bit.
inline constexpr std::uint64_t kExactLevel = ~std::uint64_t{0};

using RateFn = std::function<double(std::uint64_t m)>;

/// A moment problem observed only through a sequence of approximate
/// constraint functions phi_m, with rate(m) * ||phi_m - phi|| uniformly
/// bounded (the spec of the perturbation families below).
struct ApproximateProblem {
  MomentProblem base;
  std::string family;
  std::function<Eigen::VectorXd(std::uint64_t m, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& x)>
      phi_m;
  std::function<Eigen::MatrixXd(std::uint64_t m, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& x)>
      dphi_m;
  RateFn rate;  // m -> phi_m rate; positive, increasing, -> infinity

  /// View at one approximation level. m == kExactLevel (and the "zero"
  /// family at any m) returns the base problem unchanged.
  MomentProblem at_level(std::uint64_t m) const;
};

/// Registered families:
///   "zero"        h == 0; phi_m = phi at every level.
///   "smooth-trig" phi_m = phi + h / rate(m) with bounded smooth
///                 h(theta, x) = (sin(a+b), cos(a b), sin(a+b+j), ...) for
///                 a = sum(theta), b = sum(x); default rate m.
///   "quadrature"  phi_m = phi + h * e_m where e_m is the m-node midpoint
///                 rule error for the unit integral of sin(pi u); default
///                 rate m^2.
/// Passing a null rate selects the family default. Throws RegistryError for
/// unknown family ids.
ApproximateProblem perturb_constraint(const MomentProblem& problem,
                                      const std::string& family,
                                      RateFn rate = nullptr);
std::vector<std::string> registered_perturbation_families();

/// Two-step GMM / CUE with phi and What replaced by their level-m versions.
EstimateResult approx_two_step(const ApproximateProblem& aproblem,
                               std::uint64_t m, const Sample& sample,
                               const GmmOptions& options = {});
EstimateResult approx_cue(const ApproximateProblem& aproblem, std::uint64_t m,
                          const Sample& sample, const GmmOptions& options = {});

/// sup over a probe grid of rate(m)*||phi_m - phi|| and of the same for the
/// Jacobians; bounded uniformly in m for a valid family.
struct ApproximationProbe {
  double moment_sup = 0.0;
  double jacobian_sup = 0.0;
};

ApproximationProbe probe_approximation(const ApproximateProblem& aproblem,
                                       std::uint64_t m, int theta_points = 7,
                                       int x_points = 9, double x_radius = 3.0);

enum class ApproxEstimator { TwoStep, Cue };

struct RateCell {
  std::uint64_t m = 0;
  double phi_m = 0.0;
  double mean_sq_diff = 0.0;    // mean ||theta_m - theta||^2, paired samples
  double std_error = 0.0;       // standard error of that mean
  double n_var_theta_m = 0.0;   // n * trace of the covariance of theta_m
  int failures = 0;
  bool flagged = false;         // > 5% failed replications
};

struct RateTable {
  std::vector<RateCell> cells;
  double loglog_slope = 0.0;  // slope of log mean_sq_diff on log phi_m
  Eigen::Index n = 0;
  int replications = 0;
  std::uint64_t base_seed = 0;
};

/// Paired-difference experiment: each replication draws one sample from the
/// base problem (seed derive_seed(base_seed, r)) and estimates both theta_m
/// and theta on it. Requires an increasing m_grid and >= 100 replications;
/// the base problem must have a sampler.
RateTable rate_experiment(const ApproximateProblem& aproblem,
                          ApproxEstimator kind, Eigen::Index n,
                          const std::vector<std::uint64_t>& m_grid,
                          int replications, std::uint64_t base_seed,
                          const GmmOptions& options = {});

/// Columns: m, phi_m, mean_sq_diff, stderr, n_var_theta_m, failures.
void write_rate_csv(const RateTable& table, std::ostream& out);

}  // namespace momest
