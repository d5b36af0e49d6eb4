#include <doctest.h>

#include <cmath>
#include <sstream>

#include "momest/approx.hpp"
#include "momest/rng.hpp"
#include "test_support.hpp"

using namespace momest;
using namespace momest::test;

TEST_CASE("perturbation families") {
  const MomentProblem& nm = get_problem("normal-mean");

  SUBCASE("unknown family id") {
    CHECK_THROWS_AS(perturb_constraint(nm, "does-not-exist"), RegistryError);
    CHECK(registered_perturbation_families() ==
          std::vector<std::string>{"zero", "smooth-trig", "quadrature"});
  }
  SUBCASE("zero family never perturbs") {
    const ApproximateProblem ap = perturb_constraint(nm, "zero");
    const Eigen::VectorXd theta = scalar_theta(0.4);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.7);
    for (const std::uint64_t m : {std::uint64_t{1}, std::uint64_t{50}, kExactLevel}) {
      CHECK(bitwise_equal(ap.phi_m(m, theta, x), nm.phi(theta, x)));
    }
  }
  SUBCASE("smooth-trig probe sup is within the sqrt(2) envelope, uniformly in m") {
    const ApproximateProblem ap = perturb_constraint(nm, "smooth-trig");
    const ApproximationProbe p10 = probe_approximation(ap, 10);
    const ApproximationProbe p1000 = probe_approximation(ap, 1000);
    CHECK(p10.moment_sup <= std::sqrt(2.0) + 1e-9);
    CHECK(p10.moment_sup > 0.5);
    // rate(m) * ||phi_m - phi|| = ||h|| exactly for this family.
    CHECK(std::abs(p10.moment_sup - p1000.moment_sup) < 1e-9);
    CHECK(p10.jacobian_sup < 4.0);
    CHECK(std::abs(p10.jacobian_sup - p1000.jacobian_sup) < 1e-9);
  }
  SUBCASE("quadrature probe sup is bounded at the m^2 rate") {
    const ApproximateProblem ap = perturb_constraint(nm, "quadrature");
    for (const std::uint64_t m : {std::uint64_t{4}, std::uint64_t{16}, std::uint64_t{64}}) {
      const ApproximationProbe p = probe_approximation(ap, m);
      CHECK(p.moment_sup > 0.01);
      CHECK(p.moment_sup < 0.7);
      CHECK(p.jacobian_sup < 2.0);
    }
  }
  SUBCASE("the exact-level sentinel reproduces the base problem") {
    const ApproximateProblem ap = perturb_constraint(nm, "smooth-trig");
    const Eigen::VectorXd theta = scalar_theta(-0.3);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.9);
    CHECK(bitwise_equal(ap.phi_m(kExactLevel, theta, x), nm.phi(theta, x)));
    const MomentProblem exact = ap.at_level(kExactLevel);
    CHECK(bitwise_equal(exact.phi(theta, x), nm.phi(theta, x)));
  }
}

TEST_CASE("approximate estimators") {
  const MomentProblem& nm = get_problem("normal-mean");
  const Sample s = nm.sampler(derive_seed(7, 0), 500);

  SUBCASE("zero family is bit-identical to the exact estimators") {
    const ApproximateProblem ap = perturb_constraint(nm, "zero");
    const EstimateResult exact = gmm_two_step(nm, s);
    const EstimateResult approx = approx_two_step(ap, 12, s);
    CHECK(bitwise_equal(exact.theta_hat, approx.theta_hat));
    CHECK(bitwise_equal(exact.objective, approx.objective));

    const EstimateResult cexact = cue(nm, s);
    const EstimateResult capprox = approx_cue(ap, 12, s);
    CHECK(bitwise_equal(cexact.theta_hat, capprox.theta_hat));
  }
  SUBCASE("the exact-level sentinel is bit-identical too") {
    const ApproximateProblem ap = perturb_constraint(nm, "smooth-trig");
    const EstimateResult exact = gmm_two_step(nm, s);
    const EstimateResult approx = approx_two_step(ap, kExactLevel, s);
    CHECK(bitwise_equal(exact.theta_hat, approx.theta_hat));
  }
  SUBCASE("fidelity improves with the level on a fixed sample") {
    const ApproximateProblem ap = perturb_constraint(nm, "smooth-trig");
    const EstimateResult exact = gmm_two_step(nm, s);
    const EstimateResult at10 = approx_two_step(ap, 10, s);
    const EstimateResult at100 = approx_two_step(ap, 100, s);
    const double err10 = std::abs(at10.theta_hat[0] - exact.theta_hat[0]);
    const double err100 = std::abs(at100.theta_hat[0] - exact.theta_hat[0]);
    CHECK(err100 < err10);
    CHECK(err10 > 0.0);
  }
}

TEST_CASE("rate_experiment") {
  const MomentProblem& nm = get_problem("normal-mean");

  SUBCASE("argument validation") {
    const ApproximateProblem ap = perturb_constraint(nm, "zero");
    CHECK_THROWS_AS(
        rate_experiment(ap, ApproxEstimator::TwoStep, 50, {5, 5}, 100, 1),
        ConfigError);
    CHECK_THROWS_AS(
        rate_experiment(ap, ApproxEstimator::TwoStep, 50, {5, 10}, 99, 1),
        ConfigError);
    CHECK_THROWS_AS(
        rate_experiment(ap, ApproxEstimator::TwoStep, 50, {}, 100, 1),
        ConfigError);
  }
  SUBCASE("zero family: all paired differences are exactly zero") {
    const ApproximateProblem ap = perturb_constraint(nm, "zero");
    const RateTable table =
        rate_experiment(ap, ApproxEstimator::TwoStep, 60, {2, 4}, 100, 99);
    REQUIRE(table.cells.size() == 2);
    for (const auto& cell : table.cells) {
      CHECK(cell.mean_sq_diff == 0.0);
      CHECK(cell.failures == 0);
      CHECK_FALSE(cell.flagged);
    }
    CHECK(std::isnan(table.loglog_slope));
  }
  SUBCASE("smooth-trig: differences shrink along the grid") {
    const ApproximateProblem ap = perturb_constraint(nm, "smooth-trig");
    const RateTable table =
        rate_experiment(ap, ApproxEstimator::TwoStep, 120, {4, 16}, 100, 4242);
    REQUIRE(table.cells.size() == 2);
    CHECK(table.cells[0].mean_sq_diff > table.cells[1].mean_sq_diff);
    CHECK(table.cells[0].failures == 0);
    CHECK(table.cells[0].n_var_theta_m > 0.0);
    CHECK(table.loglog_slope < -1.0);
  }
  SUBCASE("CSV serialization") {
    const ApproximateProblem ap = perturb_constraint(nm, "zero");
    const RateTable table =
        rate_experiment(ap, ApproxEstimator::TwoStep, 60, {2, 4}, 100, 99);
    std::ostringstream out;
    write_rate_csv(table, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "m,phi_m,mean_sq_diff,stderr,n_var_theta_m,failures");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
  }
  SUBCASE("deterministic") {
    const ApproximateProblem ap = perturb_constraint(nm, "smooth-trig");
    const RateTable a =
        rate_experiment(ap, ApproxEstimator::TwoStep, 60, {4}, 100, 31);
    const RateTable b =
        rate_experiment(ap, ApproxEstimator::TwoStep, 60, {4}, 100, 31);
    CHECK(bitwise_equal(a.cells[0].mean_sq_diff, b.cells[0].mean_sq_diff));
    CHECK(bitwise_equal(a.cells[0].n_var_theta_m, b.cells[0].n_var_theta_m));
  }
}
