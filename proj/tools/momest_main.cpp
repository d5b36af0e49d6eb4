// Command-line interface: `estimate` for one sample / one estimator,
// `bounds` for efficiency-bound reports, `montecarlo` and `rate` for the
// seeded experiment runners.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "momest/momest.hpp"

namespace {

using nlohmann::ordered_json;

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

ordered_json estimate_to_json(const momest::EstimateResult& result) {
  ordered_json j;
  j["theta_hat"] = vector_to_json(result.theta_hat);
  j["objective"] = result.objective;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["gradient_norm"] = result.gradient_norm;
  j["weighting_used"] = result.weighting_used.size() > 0
                            ? matrix_to_json(result.weighting_used)
                            : ordered_json(nullptr);
  if (result.gel_weights) j["gel_weights"] = vector_to_json(*result.gel_weights);
  return j;
}

int run_estimate(const std::string& problem_id, Eigen::Index n,
                 std::uint64_t seed, const std::string& estimator,
                 const std::string& divergence, bool uncentered) {
  const momest::MomentProblem& problem = momest::get_problem(problem_id);
  if (!problem.sampler) {
    std::cerr << "error: problem '" << problem_id << "' has no sampler\n";
    return 1;
  }
  // Same convention as replication 0 of a montecarlo run with this seed.
  const momest::Sample sample = problem.sampler(momest::derive_seed(seed, 0), n);

  momest::GmmOptions options;
  options.uncentered_cue = uncentered;
  momest::EstimateResult result;
  if (estimator == "gmm-fixed") {
    result = momest::gmm_fixed(
        problem, sample, Eigen::MatrixXd::Identity(problem.k, problem.k), options);
  } else if (estimator == "two-step") {
    result = momest::gmm_two_step(problem, sample, options);
  } else if (estimator == "cue") {
    result = momest::cue(problem, sample, options);
  } else if (estimator == "gel") {
    result = momest::gel_estimate(problem, sample,
                                  momest::get_divergence(divergence))
                 .result;
  } else {
    std::cerr << "error: unknown estimator '" << estimator
              << "' (expected gmm-fixed, two-step, cue or gel)\n";
    return 1;
  }
  std::cout << estimate_to_json(result).dump(2) << '\n';
  return 0;
}

int run_bounds(const std::string& problem_id, bool with_identity,
               Eigen::Index draws, std::uint64_t seed) {
  const momest::MomentProblem& problem = momest::get_problem(problem_id);
  Eigen::MatrixXd D, V;
  if (problem.analytic_jacobian && problem.analytic_second_moment) {
    D = *problem.analytic_jacobian;
    V = *problem.analytic_second_moment;
  } else if (problem.sampler && problem.true_theta) {
    const momest::Sample draw = problem.sampler(momest::derive_seed(seed, 0), draws);
    D = momest::eval_jacobian(problem, *problem.true_theta, draw);
    V = momest::eval_second_moment(problem, *problem.true_theta, draw);
  } else {
    std::cerr << "error: problem '" << problem_id
              << "' has neither analytic moments nor a sampler with true_theta\n";
    return 1;
  }
  std::optional<Eigen::MatrixXd> M;
  if (with_identity) M = Eigen::MatrixXd::Identity(problem.k, problem.k);
  const momest::BoundsReport report = momest::make_bounds_report(D, V, M);

  ordered_json j;
  j["problem"] = problem_id;
  j["D"] = matrix_to_json(report.D);
  j["V"] = matrix_to_json(report.V);
  j["B"] = matrix_to_json(report.B);
  j["B_M"] = report.B_M ? matrix_to_json(*report.B_M) : ordered_json(nullptr);
  if (report.gap_min_eig) j["gap_min_eig"] = *report.gap_min_eig;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moment-condition estimation: GMM/GEL estimators, efficiency "
               "bounds and seeded Monte Carlo experiments"};
  app.require_subcommand(1);

  // estimate
  auto* est = app.add_subcommand("estimate", "run one estimator on one sample");
  std::string est_problem = "normal-mean";
  std::string est_kind = "two-step";
  std::string est_divergence = "el";
  Eigen::Index est_n = 500;
  std::uint64_t est_seed = 0;
  bool est_uncentered = false;
  est->add_option("--problem", est_problem, "problem id");
  est->add_option("--n", est_n, "sample size")->check(CLI::PositiveNumber);
  est->add_option("--seed", est_seed, "sampling seed");
  est->add_option("--estimator", est_kind, "gmm-fixed | two-step | cue | gel");
  est->add_option("--divergence", est_divergence, "divergence id for gel");
  est->add_flag("--uncentered", est_uncentered, "CUE with uncentered Vhat^{-1}");

  // bounds
  auto* bounds = app.add_subcommand("bounds", "print a BoundsReport as JSON");
  std::string bounds_problem = "normal-mean";
  bool bounds_identity = false;
  Eigen::Index bounds_draws = 100000;
  std::uint64_t bounds_seed = 0;
  bounds->add_option("--problem", bounds_problem, "problem id");
  bounds->add_flag("--identity", bounds_identity,
                   "also report the sandwich bound for M = I");
  bounds->add_option("--draws", bounds_draws,
                     "plug-in draw size when no analytic moments are stored")
      ->check(CLI::PositiveNumber);
  bounds->add_option("--seed", bounds_seed, "plug-in draw seed");

  // montecarlo / rate
  auto* mc = app.add_subcommand("montecarlo", "run a replication experiment");
  auto* rate = app.add_subcommand("rate", "run a paired approximation-rate experiment");
  std::string mc_config, rate_config;
  mc->add_option("config", mc_config, "experiment config JSON")->required();
  rate->add_option("config", rate_config, "rate config JSON")->required();

  bool no_timestamp = false;
  bool uncentered = false;
  std::uint64_t seed_value = 0;
  std::string out_value;
  for (CLI::App* sub : {mc, rate}) {
    sub->add_flag("--no-timestamp", no_timestamp, "omit generated_at from the report");
    sub->add_flag("--uncentered", uncentered, "CUE with uncentered Vhat^{-1}");
    sub->add_option("--seed", seed_value, "override base_seed");
    sub->add_option("--out", out_value, "override the output prefix");
  }

  CLI11_PARSE(app, argc, argv);

  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  for (CLI::App* sub : {mc, rate}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed") > 0) seed_override = seed_value;
    if (sub->count("--out") > 0) out_override = out_value;
  }

  try {
    if (est->parsed()) {
      return run_estimate(est_problem, est_n, est_seed, est_kind, est_divergence,
                          est_uncentered);
    }
    if (bounds->parsed()) {
      return run_bounds(bounds_problem, bounds_identity, bounds_draws, bounds_seed);
    }
    momest::RunOptions options;
    options.no_timestamp = no_timestamp;
    options.uncentered = uncentered;
    options.seed_override = seed_override;
    options.out_override = out_override;
    if (mc->parsed()) {
      return momest::run_experiment(mc_config, options, std::cerr);
    }
    if (rate->parsed()) {
      return momest::run_rate_experiment(rate_config, options, std::cerr);
    }
  } catch (const momest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
