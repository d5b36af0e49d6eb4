#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "momest/approx.hpp"
#include "momest/bounds.hpp"
#include "momest/gel.hpp"
#include "momest/gmm.hpp"

namespace momest {

struct EstimatorSpec {
  enum class Kind { GmmFixed, TwoStep, Cue, Gel };

  Kind kind = Kind::TwoStep;
  std::optional<Eigen::MatrixXd> weight;  // GmmFixed; absent means identity
  std::string divergence;                 // Gel
  std::string label;                      // unique within one experiment
};

struct ExperimentConfig {
  std::string problem_id;
  Eigen::Index n = 0;
  std::vector<EstimatorSpec> estimators;
  int replications = 0;
  std::uint64_t base_seed = 0;
  std::string output_path;  // prefix: writes <prefix>.csv and <prefix>.json
};

/// Parses a JSON experiment config; throws ConfigError naming the offending
/// field on malformed or missing entries.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& json_text);
void validate_config(const ExperimentConfig& config);

struct ReplicationRow {
  int replication = 0;
  std::string estimator;
  std::optional<Eigen::VectorXd> theta;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string error;  // empty on success
};

/// Rows ordered by (replication, estimator index). Replication r draws its
/// sample with derive_seed(base_seed, r); rows never depend on the total
/// replication count or on scheduling. Estimation failures are recorded in
/// the row, not thrown; run_experiment applies the systematic-failure
/// policy.
std::vector<ReplicationRow> replicate(const ExperimentConfig& config,
                                      const GmmOptions& gmm_options = {},
                                      const GelOptions& gel_options = {});

/// n * (unbiased sample covariance) of the estimates, with elementwise
/// standard errors |value| * sqrt(2/R). Throws Error with < 2 estimates.
struct VarianceEstimate {
  Eigen::MatrixXd n_cov;
  Eigen::MatrixXd std_err;
  int used = 0;
};

VarianceEstimate empirical_variance(const std::vector<Eigen::VectorXd>& estimates,
                                    Eigen::Index n);

struct EstimatorSummary {
  std::string label;
  Eigen::VectorXd mean_theta;
  VarianceEstimate variance;
  int failures = 0;
  std::optional<Eigen::MatrixXd> bound;  // B, or the sandwich bound for a
                                         // fixed-weight estimator
};

struct MonteCarloReport {
  std::string problem_id;
  Eigen::Index n = 0;
  int replications = 0;
  std::uint64_t base_seed = 0;
  std::vector<EstimatorSummary> estimators;
  std::optional<BoundsReport> bounds;
  std::string timestamp;  // empty when suppressed
};

/// Bound matrices come from the problem's analytic moments when present,
/// otherwise from a plug-in evaluation at true_theta on a large draw.
MonteCarloReport summarize(const ExperimentConfig& config,
                           const std::vector<ReplicationRow>& rows,
                           bool with_timestamp = true);

struct RunOptions {
  bool no_timestamp = false;
  bool uncentered = false;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

/// Loads the config, replicates, writes <out>.csv and <out>.json. Returns 0
/// on success, 1 on config errors, 2 when any estimator's failure rate
/// exceeds 20% (files are still written). Diagnostics go to `diagnostics`.
int run_experiment(const std::string& config_path, const RunOptions& options,
                   std::ostream& diagnostics);

/// Raw estimates as CSV: UTF-8, header row, '.' decimal separator, 17
/// significant digits.
void write_estimates_csv(const ExperimentConfig& config,
                         const std::vector<ReplicationRow>& rows,
                         std::ostream& out);
void write_report_json(const MonteCarloReport& report, std::ostream& out);

/// Configuration of a paired-difference rate experiment (the `rate` CLI
/// subcommand). phi_rate is "m", "m^2" or empty for the family default.
struct RateExperimentConfig {
  std::string problem_id;
  std::string family;
  ApproxEstimator estimator = ApproxEstimator::TwoStep;
  std::string phi_rate;
  Eigen::Index n = 0;
  std::vector<std::uint64_t> m_grid;
  int replications = 0;
  std::uint64_t base_seed = 0;
  std::string output_path;
};

RateExperimentConfig load_rate_config(const std::string& path);
RateExperimentConfig parse_rate_config(const std::string& json_text);

/// Runs rate_experiment per the config; writes <out>.csv (the RateTable) and
/// <out>.json (summary including the log-log slope). Same exit-code scheme
/// as run_experiment.
int run_rate_experiment(const std::string& config_path, const RunOptions& options,
                        std::ostream& diagnostics);

}  // namespace momest
