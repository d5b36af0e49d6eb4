#include "momest/eval.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "pairwise.hpp"

namespace momest {

namespace {

using detail::pairwise_reduce_columns;

void check_finite(const Eigen::VectorXd& value, const Eigen::VectorXd& theta,
                  Eigen::Index i, const char* what) {
  if (!value.allFinite()) {
    throw EvaluationError(std::string(what) + " returned a non-finite value at observation " +
                              std::to_string(i),
                          theta, i);
  }
}

void check_columns_finite(const Eigen::MatrixXd& values,
                          const Eigen::VectorXd& theta, const char* what) {
  if (values.allFinite()) return;
  for (Eigen::Index i = 0; i < values.cols(); ++i) {
    if (!values.col(i).allFinite()) {
      throw EvaluationError(std::string(what) +
                                " returned a non-finite value at observation " +
                                std::to_string(i),
                            theta, i);
    }
  }
}

// k x n matrix of phi(theta, X_i) values.
Eigen::MatrixXd moment_values(const MomentProblem& problem,
                              const Eigen::VectorXd& theta, const Sample& sample) {
  const Eigen::Index n = sample.n();
  if (n < 1) throw Error("sample must contain at least one observation");
  if (problem.phi_batch) {
    Eigen::MatrixXd values = problem.phi_batch(theta, sample.observations);
    if (values.rows() != problem.k || values.cols() != n) {
      throw Error("phi_batch must return a k x n matrix");
    }
    check_columns_finite(values, theta, "phi");
    return values;
  }
  Eigen::MatrixXd values(problem.k, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd v = problem.phi(theta, sample.observations.row(i).transpose());
    if (v.size() != problem.k) throw Error("phi must return a k-vector");
    check_finite(v, theta, i, "phi");
    values.col(i) = v;
  }
  return values;
}

// (d*k) x n matrix of flattened dphi(theta, X_i) values.
Eigen::MatrixXd jacobian_values(const MomentProblem& problem,
                                const Eigen::VectorXd& theta,
                                const Sample& sample) {
  const Eigen::Index n = sample.n();
  if (n < 1) throw Error("sample must contain at least one observation");
  const Eigen::Index rows = problem.d * problem.k;
  if (problem.dphi_batch) {
    Eigen::MatrixXd buffer = problem.dphi_batch(theta, sample.observations);
    if (buffer.rows() != rows || buffer.cols() != n) {
      throw Error("dphi_batch must return a (d*k) x n matrix");
    }
    check_columns_finite(buffer, theta, "dphi");
    return buffer;
  }
  Eigen::MatrixXd buffer(rows, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::MatrixXd j = problem.dphi(theta, sample.observations.row(i).transpose());
    if (j.rows() != problem.d || j.cols() != problem.k) {
      throw Error("dphi must return a d x k matrix");
    }
    Eigen::Map<const Eigen::VectorXd> flat(j.data(), rows);
    if (!flat.allFinite()) {
      throw EvaluationError("dphi returned a non-finite value at observation " +
                                std::to_string(i),
                            theta, i);
    }
    buffer.col(i) = flat;
  }
  return buffer;
}

}  // namespace

Eigen::MatrixXd eval_moment_values(const MomentProblem& problem,
                                   const Eigen::VectorXd& theta,
                                   const Sample& sample) {
  return moment_values(problem, theta, sample);
}

Eigen::VectorXd eval_moment(const MomentProblem& problem,
                            const Eigen::VectorXd& theta, const Sample& sample) {
  Eigen::MatrixXd values = moment_values(problem, theta, sample);
  const Eigen::Index n = values.cols();
  pairwise_reduce_columns(values, n);
  return values.col(0) / static_cast<double>(n);
}

Eigen::MatrixXd eval_jacobian(const MomentProblem& problem,
                              const Eigen::VectorXd& theta,
                              const Sample& sample) {
  Eigen::MatrixXd buffer = jacobian_values(problem, theta, sample);
  const Eigen::Index n = buffer.cols();
  const Eigen::Index rows = problem.d * problem.k;
  pairwise_reduce_columns(buffer, n);
  Eigen::MatrixXd out(problem.d, problem.k);
  Eigen::Map<Eigen::VectorXd>(out.data(), rows) = buffer.col(0) / static_cast<double>(n);
  return out;
}

Eigen::MatrixXd eval_jacobian_values(const MomentProblem& problem,
                                     const Eigen::VectorXd& theta,
                                     const Sample& sample) {
  return jacobian_values(problem, theta, sample);
}

Eigen::MatrixXd eval_second_moment(const MomentProblem& problem,
                                   const Eigen::VectorXd& theta,
                                   const Sample& sample) {
  return eval_moment_summary(problem, theta, sample).second_moment;
}

Eigen::MatrixXd MomentSummary::centered_covariance() const {
  Eigen::MatrixXd c = second_moment - mean * mean.transpose();
  return 0.5 * (c + c.transpose());
}

MomentSummary eval_moment_summary(const MomentProblem& problem,
                                  const Eigen::VectorXd& theta,
                                  const Sample& sample) {
  Eigen::MatrixXd values = moment_values(problem, theta, sample);
  const Eigen::Index n = values.cols();
  const Eigen::Index k = problem.k;

  Eigen::MatrixXd outer(k * k, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Map<Eigen::MatrixXd>(outer.col(i).data(), k, k) =
        values.col(i) * values.col(i).transpose();
  }
  pairwise_reduce_columns(outer, n);
  pairwise_reduce_columns(values, n);

  MomentSummary out;
  out.mean = values.col(0) / static_cast<double>(n);
  out.second_moment = Eigen::Map<Eigen::MatrixXd>(outer.col(0).data(), k, k) /
                      static_cast<double>(n);
  out.second_moment = 0.5 * (out.second_moment + out.second_moment.transpose()).eval();
  return out;
}

Eigen::MatrixXd spd_inverse_capped(const Eigen::MatrixXd& matrix,
                                   double condition_cap, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw SingularCovarianceError(std::string(what) + ": eigendecomposition failed", 0.0);
  }
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double min_eig = ev[0];
  const double max_eig = ev[ev.size() - 1];
  if (!(min_eig > 0.0) || max_eig / min_eig > condition_cap) {
    throw SingularCovarianceError(
        std::string(what) + " is singular or ill-conditioned (min eigenvalue " +
            std::to_string(min_eig) + ")",
        min_eig);
  }
  Eigen::MatrixXd inv =
      eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose()).eval();
}

Eigen::MatrixXd eval_centered_precision(const MomentProblem& problem,
                                        const Eigen::VectorXd& theta,
                                        const Sample& sample,
                                        double condition_cap) {
  const MomentSummary ms = eval_moment_summary(problem, theta, sample);
  return spd_inverse_capped(ms.centered_covariance(), condition_cap,
                            "centered moment covariance");
}

}  // namespace momest
