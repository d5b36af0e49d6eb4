#include "momest/bounds.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "momest/rng.hpp"

namespace momest {

namespace {

// Bound formulas are evaluated in extended precision: the sandwich involves
// products whose condition numbers amplify double rounding past the 1e-10
// tolerances the reports promise.
using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

MatrixXld to_ld(const Eigen::MatrixXd& m) { return m.cast<long double>(); }

Eigen::MatrixXd to_double(const MatrixXld& m) { return m.cast<double>(); }

MatrixXld symmetrized(const MatrixXld& A) {
  return 0.5L * (A + A.transpose());
}

Eigen::MatrixXd symmetrized_d(const Eigen::MatrixXd& A) {
  return 0.5 * (A + A.transpose());
}

// Inverse of a symmetric positive definite matrix via eigendecomposition.
MatrixXld spd_inverse(const MatrixXld& S, const std::string& name) {
  Eigen::SelfAdjointEigenSolver<MatrixXld> eig(symmetrized(S));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues()[0] > 0.0L)) {
    throw RankError("matrix " + name + " is not symmetric positive definite");
  }
  return symmetrized(eig.eigenvectors() *
                     eig.eigenvalues().cwiseInverse().asDiagonal() *
                     eig.eigenvectors().transpose());
}

void check_spd(const Eigen::MatrixXd& S, const std::string& name) {
  if (S.rows() != S.cols()) throw RankError("matrix " + name + " must be square");
  if ((S - S.transpose()).norm() > 1e-10 * std::max(1.0, S.norm())) {
    throw RankError("matrix " + name + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized_d(S));
  if (eig.info() != Eigen::Success || !(eig.eigenvalues()[0] > 0.0)) {
    throw RankError("matrix " + name + " is not positive definite");
  }
}

void check_full_rank(const Eigen::MatrixXd& D) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  const auto& sv = svd.singularValues();
  const double tol = std::max(D.rows(), D.cols()) * 2.2e-16 * sv[0];
  if (sv.size() < D.rows() || !(sv[D.rows() - 1] > tol)) {
    throw RankError("matrix D is rank deficient");
  }
}

}  // namespace

Eigen::MatrixXd efficiency_bound(const Eigen::MatrixXd& D,
                                 const Eigen::MatrixXd& V) {
  if (D.cols() != V.rows()) throw DimensionError("D and V dimensions disagree");
  if (D.rows() > D.cols()) throw RankError("matrix D needs k >= d");
  check_full_rank(D);
  check_spd(V, "V");
  const MatrixXld Dl = to_ld(D);
  const MatrixXld Vinv = spd_inverse(to_ld(V), "V");
  return to_double(
      spd_inverse(symmetrized(Dl * Vinv * Dl.transpose()), "D V^{-1} D^t"));
}

Eigen::MatrixXd gmm_bound(const Eigen::MatrixXd& D, const Eigen::MatrixXd& V,
                          const Eigen::MatrixXd& M) {
  if (D.cols() != V.rows() || D.cols() != M.rows()) {
    throw DimensionError("D, V, M dimensions disagree");
  }
  if (D.rows() > D.cols()) throw RankError("matrix D needs k >= d");
  check_full_rank(D);
  check_spd(V, "V");
  check_spd(M, "M");
  const MatrixXld Dl = to_ld(D), Vl = to_ld(V), Ml = to_ld(M);
  const MatrixXld bread =
      spd_inverse(symmetrized(Dl * Ml * Dl.transpose()), "D M D^t");
  const MatrixXld meat = symmetrized(Dl * Ml * Vl * Ml * Dl.transpose());
  return to_double(symmetrized(bread * meat * bread));
}

bool loewner_leq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Bm,
                 double tol) {
  if (A.rows() != Bm.rows() || A.cols() != Bm.cols() || A.rows() != A.cols()) {
    throw DimensionError("loewner_leq needs square matrices of equal size");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized_d(Bm - A));
  return eig.eigenvalues()[0] >= -tol;
}

Lemma1Report verify_lemma1(const Eigen::MatrixXd& D, const Eigen::MatrixXd& V,
                           const Eigen::MatrixXd& M, double tol) {
  check_full_rank(D);
  check_spd(V, "V");
  check_spd(M, "M");

  const MatrixXld Dl = to_ld(D), Vl = to_ld(V);
  const auto lhs_for = [&](const MatrixXld& W) {
    const MatrixXld S = symmetrized(Dl * W * Dl.transpose());
    const MatrixXld inner =
        spd_inverse(symmetrized(Dl * W * Vl * W * Dl.transpose()), "D M V M D^t");
    return to_double(symmetrized(S * inner * S));
  };
  const Eigen::MatrixXd rhs =
      to_double(symmetrized(Dl * spd_inverse(Vl, "V") * Dl.transpose()));

  Lemma1Report report;
  const Eigen::MatrixXd lhs = lhs_for(to_ld(M));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized_d(rhs - lhs));
  report.margin_min_eig = eig.eigenvalues()[0];
  report.holds = report.margin_min_eig >= -tol;

  const Eigen::MatrixXd lhs_opt = lhs_for(spd_inverse(Vl, "V"));
  report.optimal_gap_norm = (lhs_opt - rhs).norm();
  report.equality_at_optimal = report.optimal_gap_norm < tol;
  return report;
}

BoundsReport make_bounds_report(const Eigen::MatrixXd& D,
                                const Eigen::MatrixXd& V,
                                const std::optional<Eigen::MatrixXd>& M) {
  BoundsReport report;
  report.D = D;
  report.V = V;
  report.B = efficiency_bound(D, V);
  if (M) {
    report.B_M = gmm_bound(D, V, *M);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        symmetrized_d(*report.B_M - report.B));
    report.gap_min_eig = eig.eigenvalues()[0];
  }
  return report;
}

RandomInstance random_bounds_instance(std::uint64_t seed, Eigen::Index d,
                                      Eigen::Index k) {
  if (d < 1 || k < d) throw Error("random instance needs 1 <= d <= k");
  Rng rng(seed);
  const auto normal_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd A(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) A(i, j) = rng.next_normal();
    }
    return A;
  };

  RandomInstance inst;
  for (int attempt = 0; attempt < 64; ++attempt) {
    inst.D = normal_matrix(d, k);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.D);
    if (svd.singularValues()[d - 1] > 1e-6 * svd.singularValues()[0]) break;
  }
  const Eigen::MatrixXd G = normal_matrix(k, k);
  inst.V = G * G.transpose() + 0.1 * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd H = normal_matrix(k, k);
  inst.M = H * H.transpose() + 0.1 * Eigen::MatrixXd::Identity(k, k);
  return inst;
}

}  // namespace momest
