#include <doctest.h>

#include <Eigen/Dense>

#include "momest/eval.hpp"
#include "momest/problem.hpp"
#include "momest/rng.hpp"
#include "test_support.hpp"

using namespace momest;
using namespace momest::test;

TEST_CASE("eval_moment on the normal-mean problem") {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = sample_from({0.0, 2.0});

  SUBCASE("vanishes at the sample root theta = 1") {
    const Eigen::VectorXd f = eval_moment(nm, scalar_theta(1.0), s);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
  }
  SUBCASE("theta = 0 gives (1, 1)") {
    const Eigen::VectorXd f = eval_moment(nm, scalar_theta(0.0), s);
    CHECK(f[0] == doctest::Approx(1.0));
    CHECK(f[1] == doctest::Approx(1.0));
  }
  SUBCASE("single point at the root gives the zero vector") {
    const MomentProblem& toy = get_problem("mean-1d");
    const Eigen::VectorXd f = eval_moment(toy, scalar_theta(1.0), sample_from({1.0}));
    CHECK(f[0] == 0.0);
  }
  SUBCASE("deterministic: repeated evaluation is bit-identical") {
    const Eigen::VectorXd a = eval_moment(nm, scalar_theta(0.3), s);
    const Eigen::VectorXd b = eval_moment(nm, scalar_theta(0.3), s);
    CHECK(bitwise_equal(a, b));
  }
  SUBCASE("non-finite phi raises EvaluationError with the observation index") {
    MomentProblem bad = get_problem("mean-1d");
    bad.phi = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, (x[0] - theta[0]) / x[0]).eval();
    };
    const Sample z = sample_from({1.0, 0.0, 2.0});
    CHECK_THROWS_AS(eval_moment(bad, scalar_theta(1.0), z), EvaluationError);
    try {
      eval_moment(bad, scalar_theta(1.0), z);
    } catch (const EvaluationError& e) {
      CHECK(e.observation() == 1);
      CHECK(e.theta()[0] == 1.0);
    }
  }
}

TEST_CASE("eval_jacobian on the normal-mean problem") {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = sample_from({0.0, 2.0});

  Eigen::MatrixXd j1 = eval_jacobian(nm, scalar_theta(1.0), s);
  CHECK(j1(0, 0) == -1.0);
  CHECK(j1(0, 1) == -2.0);
  Eigen::MatrixXd j0 = eval_jacobian(nm, scalar_theta(0.0), s);
  CHECK(j0(0, 0) == -1.0);
  CHECK(j0(0, 1) == 0.0);
}

TEST_CASE("analytic Jacobian matches finite differences of eval_moment") {
  const double h0 = std::cbrt(2.2e-16);
  for (std::uint64_t instance = 0; instance < 4; ++instance) {
    const MomentProblem p = make_random_problem(100 + instance);
    Rng rng(derive_seed(7, instance));
    const Sample s = p.sampler(derive_seed(11, instance), 40);
    for (int probe = 0; probe < 25; ++probe) {
      Eigen::VectorXd theta(p.d);
      for (Eigen::Index j = 0; j < p.d; ++j) {
        theta[j] = -1.5 + 3.0 * rng.next_uniform();
      }
      const Eigen::MatrixXd analytic = eval_jacobian(p, theta, s);
      Eigen::MatrixXd fd(p.d, p.k);
      for (Eigen::Index j = 0; j < p.d; ++j) {
        const double h = h0 * std::max(1.0, std::abs(theta[j]));
        Eigen::VectorXd tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        fd.row(j) =
            (eval_moment(p, tp, s) - eval_moment(p, tm, s)).transpose() / (2.0 * h);
      }
      const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
      CHECK((fd - analytic).cwiseAbs().maxCoeff() / scale < 1e-6);
    }
  }
}

TEST_CASE("eval_second_moment") {
  const MomentProblem& nm = get_problem("normal-mean");

  SUBCASE("outer products on the two-point sample") {
    const Eigen::MatrixXd v = eval_second_moment(nm, scalar_theta(1.0), sample_from({0.0, 2.0}));
    CHECK(v(0, 0) == doctest::Approx(1.0));
    CHECK(v(0, 1) == doctest::Approx(2.0));
    CHECK(v(1, 0) == doctest::Approx(2.0));
    CHECK(v(1, 1) == doctest::Approx(4.0));
  }
  SUBCASE("single root point gives the zero matrix") {
    const MomentProblem& toy = get_problem("mean-1d");
    const Eigen::MatrixXd v = eval_second_moment(toy, scalar_theta(1.0), sample_from({1.0}));
    CHECK(v(0, 0) == 0.0);
  }
  SUBCASE("large draw approaches the analytic V = [[1,2],[2,6]]") {
    const Sample big = nm.sampler(derive_seed(2024, 0), 200000);
    const Eigen::MatrixXd v = eval_second_moment(nm, scalar_theta(1.0), big);
    CHECK(std::abs(v(0, 0) - 1.0) < 0.05);
    CHECK(std::abs(v(0, 1) - 2.0) < 0.10);
    CHECK(std::abs(v(1, 1) - 6.0) < 0.25);
  }
  SUBCASE("symmetric positive semidefinite on random samples") {
    Rng rng(99);
    for (int rep = 0; rep < 20; ++rep) {
      const Sample s = nm.sampler(rng.next_u64(), 37);
      const double theta = -2.5 + 5.0 * rng.next_uniform();
      const Eigen::MatrixXd v = eval_second_moment(nm, scalar_theta(theta), s);
      CHECK((v - v.transpose()).norm() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
      CHECK(eig.eigenvalues()[0] >= -1e-10 * v.trace());
    }
  }
}

TEST_CASE("eval_centered_precision") {
  const MomentProblem& nm = get_problem("normal-mean");

  SUBCASE("large draw approaches V^{-1} = [[3,-1],[-1,0.5]]") {
    const Sample big = nm.sampler(derive_seed(31337, 0), 200000);
    const Eigen::MatrixXd w = eval_centered_precision(nm, scalar_theta(1.0), big);
    CHECK(std::abs(w(0, 0) - 3.0) < 0.1);
    CHECK(std::abs(w(0, 1) + 1.0) < 0.05);
    CHECK(std::abs(w(1, 1) - 0.5) < 0.02);
  }
  SUBCASE("standard-normal moments give the identity") {
    MomentProblem p;
    p.d = 1;
    p.k = 2;
    p.x_dim = 2;
    p.theta_box.resize(1, 2);
    p.theta_box << -1.0, 1.0;
    p.phi = [](const Eigen::VectorXd&, const Eigen::VectorXd& x) {
      return x.eval();
    };
    p.dphi = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Zero(1, 2).eval();
    };
    Rng rng(555);
    Sample s;
    s.observations.resize(100000, 2);
    for (Eigen::Index i = 0; i < s.n(); ++i) {
      s.observations(i, 0) = rng.next_normal();
      s.observations(i, 1) = rng.next_normal();
    }
    const Eigen::MatrixXd w = eval_centered_precision(p, scalar_theta(0.0), s);
    CHECK((w - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.02);
  }
  SUBCASE("rank-1 covariance raises SingularCovarianceError") {
    CHECK_THROWS_AS(
        eval_centered_precision(nm, scalar_theta(1.0), sample_from({0.0, 2.0})),
        SingularCovarianceError);
    try {
      eval_centered_precision(nm, scalar_theta(1.0), sample_from({0.0, 2.0}));
    } catch (const SingularCovarianceError& e) {
      CHECK(std::abs(e.min_eigenvalue()) < 1e-12);
    }
  }
  SUBCASE("inverse round-trip: W^{-1} + F F^t recovers Vhat") {
    Rng rng(4242);
    for (int rep = 0; rep < 10; ++rep) {
      const Sample s = nm.sampler(rng.next_u64(), 50);
      const Eigen::VectorXd theta = scalar_theta(-1.0 + 2.0 * rng.next_uniform());
      const MomentSummary ms = eval_moment_summary(nm, theta, s);
      const Eigen::MatrixXd w = eval_centered_precision(nm, theta, s);
      const Eigen::MatrixXd recovered =
          w.inverse() + ms.mean * ms.mean.transpose();
      CHECK((recovered - ms.second_moment).norm() <
            1e-10 * std::max(1.0, ms.second_moment.norm()));
    }
  }
}

TEST_CASE("problem validation") {
  SUBCASE("registered problems pass") {
    CHECK_NOTHROW(validate_problem(get_problem("normal-mean")));
    CHECK_NOTHROW(validate_problem(get_problem("mean-1d")));
    CHECK_NOTHROW(validate_problem(make_random_problem(3)));
  }
  SUBCASE("k < d is rejected") {
    MomentProblem p = make_random_problem(4, 2, 3, 2);
    p.k = 1;
    CHECK_THROWS_AS(validate_problem(p), Error);
  }
  SUBCASE("unbounded box is rejected") {
    MomentProblem p = get_problem("mean-1d");
    p.theta_box(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_problem(p), Error);
  }
  SUBCASE("true_theta on the boundary is rejected") {
    MomentProblem p = get_problem("mean-1d");
    p.true_theta = scalar_theta(3.0);
    CHECK_THROWS_AS(validate_problem(p), Error);
  }
  SUBCASE("wrong dphi is caught by the finite-difference probe") {
    MomentProblem p = get_problem("mean-1d");
    p.dphi = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Constant(1, 1, -1.25).eval();
    };
    CHECK_THROWS_AS(validate_problem(p), Error);
  }
  SUBCASE("unknown registry id") {
    CHECK_THROWS_AS(get_problem("no-such-problem"), RegistryError);
  }
}
