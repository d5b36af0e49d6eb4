#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "momest/errors.hpp"

namespace momest {

/// Efficiency bound report for a moment model with mean Jacobian D (d x k)
/// and second moment V (k x k).
struct BoundsReport {
  Eigen::MatrixXd D;
  Eigen::MatrixXd V;
  Eigen::MatrixXd B;  // [D V^{-1} D^t]^{-1}
  std::optional<Eigen::MatrixXd> B_M;      // sandwich bound for a supplied M
  std::optional<double> gap_min_eig;       // min eigenvalue of B_M - B
};

/// B = [D V^{-1} D^t]^{-1}, symmetrized after each inversion.
/// Throws RankError naming the offending matrix when D is rank deficient or
/// V is not symmetric positive definite.
Eigen::MatrixXd efficiency_bound(const Eigen::MatrixXd& D,
                                 const Eigen::MatrixXd& V);

/// Sandwich bound [D M D^t]^{-1} [D M V M D^t] [D M D^t]^{-1}; equals
/// efficiency_bound(D, V) at M = V^{-1} and is 0-homogeneous in M.
Eigen::MatrixXd gmm_bound(const Eigen::MatrixXd& D, const Eigen::MatrixXd& V,
                          const Eigen::MatrixXd& M);

/// true iff the smallest eigenvalue of (Bm - A) is >= -tol.
bool loewner_leq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Bm,
                 double tol);

struct Lemma1Report {
  bool holds = false;                // D M D^t [D M V M D^t]^{-1} D M D^t <= D V^{-1} D^t
  bool equality_at_optimal = false;  // the two sides agree at M = V^{-1}
  double margin_min_eig = 0.0;       // min eigenvalue of (rhs - lhs)
  double optimal_gap_norm = 0.0;     // ||difference|| at M = V^{-1}
};

Lemma1Report verify_lemma1(const Eigen::MatrixXd& D, const Eigen::MatrixXd& V,
                           const Eigen::MatrixXd& M, double tol);

BoundsReport make_bounds_report(const Eigen::MatrixXd& D,
                                const Eigen::MatrixXd& V,
                                const std::optional<Eigen::MatrixXd>& M = {});

/// Seeded full-rank instance for property sweeps: D with i.i.d. standard
/// normal entries (rank-deficient draws rejected), V = G G^t + 0.1 I and
/// M = H H^t + 0.1 I with G, H likewise standard normal.
struct RandomInstance {
  Eigen::MatrixXd D;  // d x k
  Eigen::MatrixXd V;  // k x k SPD
  Eigen::MatrixXd M;  // k x k SPD
};

RandomInstance random_bounds_instance(std::uint64_t seed, Eigen::Index d,
                                      Eigen::Index k);

}  // namespace momest
