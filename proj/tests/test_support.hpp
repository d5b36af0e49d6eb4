#pragma once

#include <cstring>
#include <string>

#include <Eigen/Core>

#include "momest/problem.hpp"
#include "momest/rng.hpp"

namespace momest::test {

// Sample yardstick: bitwise equality of double buffers.
inline bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

inline bool bitwise_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

inline Sample sample_from(std::initializer_list<double> values) {
  Sample s;
  s.observations.resize(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) s.observations(i++, 0) = v;
  return s;
}

inline Eigen::VectorXd scalar_theta(double v) {
  return Eigen::VectorXd::Constant(1, v);
}

// Randomized problem with analytic Jacobian, used as the finite-difference
// oracle target: phi_j = sin(a_j' theta + b_j' x) + (c_j' theta)(d_j' x) + e_j' theta.
inline MomentProblem make_random_problem(std::uint64_t seed, Eigen::Index d = 2,
                                         Eigen::Index k = 3, Eigen::Index q = 2) {
  Rng rng(mix64(seed));
  Eigen::MatrixXd A(k, d), C(k, d), E(k, d), Bx(k, q), Dx(k, q);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index t = 0; t < d; ++t) {
      A(j, t) = rng.next_normal();
      C(j, t) = 0.5 * rng.next_normal();
      E(j, t) = rng.next_normal();
    }
    for (Eigen::Index t = 0; t < q; ++t) {
      Bx(j, t) = rng.next_normal();
      Dx(j, t) = 0.5 * rng.next_normal();
    }
  }

  MomentProblem p;
  p.d = d;
  p.k = k;
  p.x_dim = q;
  p.theta_box.resize(d, 2);
  for (Eigen::Index j = 0; j < d; ++j) {
    p.theta_box(j, 0) = -2.0;
    p.theta_box(j, 1) = 2.0;
  }
  p.phi = [=](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    Eigen::VectorXd v(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      v[j] = std::sin(A.row(j).dot(theta) + Bx.row(j).dot(x)) +
             C.row(j).dot(theta) * Dx.row(j).dot(x) + E.row(j).dot(theta);
    }
    return v;
  };
  p.dphi = [=](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    Eigen::MatrixXd jac(d, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double cosv = std::cos(A.row(j).dot(theta) + Bx.row(j).dot(x));
      for (Eigen::Index t = 0; t < d; ++t) {
        jac(t, j) = A(j, t) * cosv + C(j, t) * Dx.row(j).dot(x) + E(j, t);
      }
    }
    return jac;
  };
  p.sampler = [q](std::uint64_t s, Eigen::Index n) {
    Rng r(s);
    Sample out;
    out.observations.resize(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < q; ++j) out.observations(i, j) = r.next_normal();
    }
    return out;
  };
  return p;
}

}  // namespace momest::test
