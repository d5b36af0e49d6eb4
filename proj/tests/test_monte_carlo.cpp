#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "momest/monte_carlo.hpp"
#include "momest/rng.hpp"
#include "test_support.hpp"

using namespace momest;
using namespace momest::test;

namespace {

ExperimentConfig toy_config(int replications, Eigen::Index n = 30) {
  ExperimentConfig config;
  config.problem_id = "mean-1d";
  config.n = n;
  config.replications = replications;
  config.base_seed = 2718;
  EstimatorSpec spec;
  spec.kind = EstimatorSpec::Kind::GmmFixed;
  spec.label = "gmm-fixed";
  config.estimators.push_back(spec);
  return config;
}

}  // namespace

TEST_CASE("config parsing names the offending field") {
  SUBCASE("minimal valid config") {
    const ExperimentConfig c = parse_experiment_config(R"({
      "problem": "normal-mean", "n": 100, "replications": 5, "base_seed": 1,
      "estimators": [{"kind": "two-step"}, {"kind": "gel", "divergence": "el"}],
      "output": "out/x"
    })");
    CHECK(c.problem_id == "normal-mean");
    CHECK(c.estimators.size() == 2);
    CHECK(c.estimators[0].label == "two-step");
    CHECK(c.estimators[1].label == "gel-el");
    CHECK_NOTHROW(validate_config(c));
  }
  SUBCASE("missing n") {
    try {
      parse_experiment_config(R"({"problem": "normal-mean", "replications": 5,
        "base_seed": 1, "estimators": [{"kind": "cue"}]})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "n");
    }
  }
  SUBCASE("bad estimator kind") {
    try {
      parse_experiment_config(R"({"problem": "normal-mean", "n": 100,
        "replications": 5, "base_seed": 1, "estimators": [{"kind": "qmle"}]})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "estimators[0].kind");
    }
  }
  SUBCASE("unknown divergence id is caught by validation, naming the field") {
    const ExperimentConfig c = parse_experiment_config(R"({
      "problem": "normal-mean", "n": 100, "replications": 5, "base_seed": 1,
      "estimators": [{"kind": "gel", "divergence": "klx"}]})");
    try {
      validate_config(c);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "estimators[0].divergence");
      CHECK(std::string(e.what()).find("klx") != std::string::npos);
    }
  }
  SUBCASE("n below max(2, k+1)") {
    const ExperimentConfig c = parse_experiment_config(R"({
      "problem": "normal-mean", "n": 2, "replications": 5, "base_seed": 1,
      "estimators": [{"kind": "cue"}]})");
    try {
      validate_config(c);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "n");
    }
  }
  SUBCASE("weight only applies to gmm-fixed") {
    CHECK_THROWS_AS(parse_experiment_config(R"({
      "problem": "normal-mean", "n": 100, "replications": 5, "base_seed": 1,
      "estimators": [{"kind": "cue", "weight": "identity"}]})"),
                    ConfigError);
  }
  SUBCASE("duplicate auto labels get deterministic suffixes") {
    const ExperimentConfig c = parse_experiment_config(R"({
      "problem": "normal-mean", "n": 100, "replications": 5, "base_seed": 1,
      "estimators": [{"kind": "cue"}, {"kind": "cue"}]})");
    CHECK(c.estimators[0].label == "cue");
    CHECK(c.estimators[1].label == "cue-2");
  }
}

TEST_CASE("empirical_variance") {
  SUBCASE("constant estimates give the zero matrix") {
    std::vector<Eigen::VectorXd> est(5, scalar_theta(1.25));
    const VarianceEstimate v = empirical_variance(est, 100);
    CHECK(v.n_cov(0, 0) == 0.0);
    CHECK(v.used == 5);
  }
  SUBCASE("two scalar estimates: n (a-b)^2 / 2") {
    const double a = 0.4, b = 1.9;
    std::vector<Eigen::VectorXd> est{scalar_theta(a), scalar_theta(b)};
    const VarianceEstimate v = empirical_variance(est, 50);
    CHECK(v.n_cov(0, 0) == doctest::Approx(50.0 * (a - b) * (a - b) / 2.0).epsilon(1e-14));
    CHECK(v.std_err(0, 0) == doctest::Approx(v.n_cov(0, 0) * std::sqrt(2.0 / 2.0)));
  }
  SUBCASE("fewer than two estimates throw") {
    std::vector<Eigen::VectorXd> est{scalar_theta(1.0)};
    CHECK_THROWS_AS(empirical_variance(est, 10), Error);
  }
}

TEST_CASE("replicate") {
  SUBCASE("single replication of the toy problem returns the sample mean") {
    const ExperimentConfig config = toy_config(1);
    const auto rows = replicate(config);
    REQUIRE(rows.size() == 1);
    const MomentProblem& toy = get_problem("mean-1d");
    const Sample s = toy.sampler(derive_seed(config.base_seed, 0), config.n);
    REQUIRE(rows[0].theta.has_value());
    CHECK(std::abs((*rows[0].theta)[0] - s.observations.col(0).mean()) < 1e-10);
    CHECK(rows[0].error.empty());
  }
  SUBCASE("bit-identical across repeated runs") {
    const ExperimentConfig config = toy_config(8);
    const auto a = replicate(config);
    const auto b = replicate(config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(bitwise_equal(*a[i].theta, *b[i].theta));
      CHECK(bitwise_equal(a[i].objective, b[i].objective));
    }
  }
  SUBCASE("rows do not depend on the total replication count") {
    const auto small = replicate(toy_config(3));
    const auto large = replicate(toy_config(9));
    for (std::size_t i = 0; i < small.size(); ++i) {
      CHECK(bitwise_equal(*small[i].theta, *large[i].theta));
    }
  }
}

TEST_CASE("summarize mirrors the bounds module exactly") {
  const ExperimentConfig config = toy_config(6);
  const auto rows = replicate(config);
  const MonteCarloReport report = summarize(config, rows, false);
  REQUIRE(report.bounds.has_value());
  const MomentProblem& toy = get_problem("mean-1d");
  const Eigen::MatrixXd B =
      efficiency_bound(*toy.analytic_jacobian, *toy.analytic_second_moment);
  CHECK(report.bounds->B == B);
  CHECK(report.timestamp.empty());
  REQUIRE(report.estimators.size() == 1);
  REQUIRE(report.estimators[0].bound.has_value());
  // Identity-weighted bound for the exactly identified toy equals B.
  CHECK((*report.estimators[0].bound - B).norm() < 1e-14);
}

TEST_CASE("estimates CSV round-trips at full precision") {
  const ExperimentConfig config = toy_config(3);
  const auto rows = replicate(config);
  std::ostringstream out;
  write_estimates_csv(config, rows, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "replication,estimator,converged,iterations,objective,theta_0,error");
  int count = 0;
  std::string line;
  while (std::getline(in, line)) {
    // theta_0 is the 6th field; parse it back and compare bitwise.
    std::istringstream fields(line);
    std::string field;
    for (int i = 0; i < 6; ++i) std::getline(fields, field, ',');
    const double parsed = std::strtod(field.c_str(), nullptr);
    CHECK(bitwise_equal(parsed, (*rows[count].theta)[0]));
    ++count;
  }
  CHECK(count == 3);
}

TEST_CASE("run_experiment end to end") {
  namespace fs = std::filesystem;
  const fs::path scratch = fs::path(MOMEST_TEST_SCRATCH) / "mc";
  fs::create_directories(scratch);

  SUBCASE("valid config writes both files and exits 0") {
    const fs::path cfg = scratch / "ok.json";
    {
      std::ofstream out(cfg);
      out << R"({"problem": "mean-1d", "n": 30, "replications": 4,
                 "base_seed": 9, "estimators": [{"kind": "two-step"}],
                 "output": ")" << (scratch / "ok-run").string() << R"("})";
    }
    std::ostringstream diag;
    CHECK(run_experiment(cfg.string(), {}, diag) == 0);
    CHECK(fs::exists(scratch / "ok-run.csv"));
    CHECK(fs::exists(scratch / "ok-run.json"));
  }
  SUBCASE("config errors exit nonzero and name the field") {
    const fs::path cfg = scratch / "bad.json";
    {
      std::ofstream out(cfg);
      out << R"({"problem": "normal-mean", "n": 50, "replications": 2,
                 "base_seed": 9,
                 "estimators": [{"kind": "gel", "divergence": "klx"}],
                 "output": ")" << (scratch / "bad-run").string() << R"("})";
    }
    std::ostringstream diag;
    CHECK(run_experiment(cfg.string(), {}, diag) != 0);
    CHECK(diag.str().find("estimators[0].divergence") != std::string::npos);
  }
  SUBCASE("systematic failure exits 2 after writing the files") {
    // Duplicated moment coordinate: the centered covariance is always
    // singular, so two-step fails in every replication.
    MomentProblem degenerate = get_problem("mean-1d");
    degenerate.k = 2;
    degenerate.phi = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
      Eigen::VectorXd v(2);
      v[0] = x[0] - theta[0];
      v[1] = 2.0 * (x[0] - theta[0]);
      return v;
    };
    degenerate.dphi = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
      Eigen::MatrixXd j(1, 2);
      j << -1.0, -2.0;
      return j;
    };
    degenerate.phi_batch = nullptr;
    degenerate.dphi_batch = nullptr;
    degenerate.analytic_jacobian.reset();
    degenerate.analytic_second_moment.reset();
    degenerate.true_theta.reset();
    register_problem("degenerate-dup", degenerate);

    const fs::path cfg = scratch / "degenerate.json";
    {
      std::ofstream out(cfg);
      out << R"({"problem": "degenerate-dup", "n": 30, "replications": 4,
                 "base_seed": 9, "estimators": [{"kind": "two-step"}],
                 "output": ")" << (scratch / "degenerate-run").string() << R"("})";
    }
    std::ostringstream diag;
    CHECK(run_experiment(cfg.string(), {}, diag) == 2);
    CHECK(diag.str().find("systematic failure") != std::string::npos);
    CHECK(fs::exists(scratch / "degenerate-run.csv"));
  }
}

TEST_CASE("rate config parsing") {
  SUBCASE("valid") {
    const RateExperimentConfig c = parse_rate_config(R"({
      "problem": "normal-mean", "family": "smooth-trig", "estimator": "cue",
      "n": 100, "m_grid": [5, 10], "replications": 100, "base_seed": 3,
      "output": "out/rate"})");
    CHECK(c.family == "smooth-trig");
    CHECK(c.estimator == ApproxEstimator::Cue);
    CHECK(c.m_grid == std::vector<std::uint64_t>{5, 10});
  }
  SUBCASE("bad estimator name") {
    try {
      parse_rate_config(R"({"problem": "normal-mean", "family": "zero",
        "estimator": "three-step", "n": 100, "m_grid": [5],
        "replications": 100, "base_seed": 3})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == "estimator");
    }
  }
}
