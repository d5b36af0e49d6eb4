#include "momest/monte_carlo.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "csv_util.hpp"
#include "momest/approx.hpp"
#include "momest/rng.hpp"

namespace momest {

namespace {

using nlohmann::ordered_json;

// Seed tag for the plug-in bound draw; replication seeds use small indices.
constexpr std::uint64_t kBoundsDrawTag = 0x424F554E44ull;
constexpr Eigen::Index kBoundsDrawSize = 100000;

std::string estimator_kind_name(EstimatorSpec::Kind kind) {
  switch (kind) {
    case EstimatorSpec::Kind::GmmFixed: return "gmm-fixed";
    case EstimatorSpec::Kind::TwoStep: return "two-step";
    case EstimatorSpec::Kind::Cue: return "cue";
    case EstimatorSpec::Kind::Gel: return "gel";
  }
  return "?";
}

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

Eigen::MatrixXd matrix_from_json(const ordered_json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(field, "expected a 2-D array of numbers");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
      throw ConfigError(field, "rows must have equal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(field, "entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

const ordered_json& require_field(const ordered_json& j, const std::string& name,
                                  const std::string& prefix) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw ConfigError(prefix.empty() ? name : prefix + "." + name, "missing field");
  }
  return *it;
}

std::string field_path(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

std::uint64_t read_seed(const ordered_json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(j.get<long long>());
  }
  throw ConfigError(field, "must be a nonnegative integer");
}

long long read_positive_int(const ordered_json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw ConfigError(field, "must be a positive integer");
  }
  return j.get<long long>();
}

EstimatorSpec parse_estimator(const ordered_json& j, const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix, "must be an object");
  EstimatorSpec spec;
  const ordered_json& kind = require_field(j, "kind", prefix);
  if (!kind.is_string()) throw ConfigError(field_path(prefix, "kind"), "must be a string");
  const std::string kind_str = kind.get<std::string>();
  if (kind_str == "gmm-fixed") {
    spec.kind = EstimatorSpec::Kind::GmmFixed;
  } else if (kind_str == "two-step") {
    spec.kind = EstimatorSpec::Kind::TwoStep;
  } else if (kind_str == "cue") {
    spec.kind = EstimatorSpec::Kind::Cue;
  } else if (kind_str == "gel") {
    spec.kind = EstimatorSpec::Kind::Gel;
  } else {
    throw ConfigError(field_path(prefix, "kind"),
                      "unknown estimator kind '" + kind_str +
                          "' (expected gmm-fixed, two-step, cue or gel)");
  }

  if (auto it = j.find("weight"); it != j.end()) {
    if (spec.kind != EstimatorSpec::Kind::GmmFixed) {
      throw ConfigError(field_path(prefix, "weight"),
                        "only valid for kind gmm-fixed");
    }
    if (it->is_string()) {
      if (it->get<std::string>() != "identity") {
        throw ConfigError(field_path(prefix, "weight"),
                          "string form must be \"identity\"");
      }
    } else {
      spec.weight = matrix_from_json(*it, field_path(prefix, "weight"));
    }
  }

  if (auto it = j.find("divergence"); it != j.end()) {
    if (spec.kind != EstimatorSpec::Kind::Gel) {
      throw ConfigError(field_path(prefix, "divergence"), "only valid for kind gel");
    }
    if (!it->is_string()) {
      throw ConfigError(field_path(prefix, "divergence"), "must be a string");
    }
    spec.divergence = it->get<std::string>();
  }
  if (spec.kind == EstimatorSpec::Kind::Gel && spec.divergence.empty()) {
    throw ConfigError(field_path(prefix, "divergence"), "missing field");
  }

  if (auto it = j.find("label"); it != j.end()) {
    if (!it->is_string()) throw ConfigError(field_path(prefix, "label"), "must be a string");
    spec.label = it->get<std::string>();
  }
  return spec;
}

void assign_labels(std::vector<EstimatorSpec>& estimators) {
  std::vector<std::string> user_labels;
  for (const auto& e : estimators) {
    if (!e.label.empty()) user_labels.push_back(e.label);
  }
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    auto& e = estimators[i];
    if (!e.label.empty()) continue;
    std::string base = estimator_kind_name(e.kind);
    if (e.kind == EstimatorSpec::Kind::Gel) base += "-" + e.divergence;
    std::string label = base;
    int suffix = 2;
    const auto taken = [&](const std::string& c) {
      for (std::size_t q = 0; q < estimators.size(); ++q) {
        if (q != i && estimators[q].label == c) return true;
      }
      return false;
    };
    while (taken(label)) label = base + "-" + std::to_string(suffix++);
    e.label = label;
  }
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    for (std::size_t q = i + 1; q < estimators.size(); ++q) {
      if (estimators[i].label == estimators[q].label) {
        throw ConfigError("estimators[" + std::to_string(q) + "].label",
                          "duplicate label '" + estimators[q].label + "'");
      }
    }
  }
}

EstimateResult run_estimator(const EstimatorSpec& spec,
                             const MomentProblem& problem, const Sample& sample,
                             const GmmOptions& gmm_options,
                             const GelOptions& gel_options) {
  WeightingScheme scheme;
  switch (spec.kind) {
    case EstimatorSpec::Kind::GmmFixed:
      scheme.kind = WeightingScheme::Kind::Fixed;
      if (spec.weight) scheme.fixed = *spec.weight;
      break;
    case EstimatorSpec::Kind::TwoStep:
      scheme.kind = WeightingScheme::Kind::TwoStep;
      break;
    case EstimatorSpec::Kind::Cue:
      scheme.kind = WeightingScheme::Kind::Cue;
      break;
    case EstimatorSpec::Kind::Gel:
      return gel_estimate(problem, sample, get_divergence(spec.divergence),
                          gel_options)
          .result;
  }
  return gmm_estimate(problem, sample, scheme, gmm_options);
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<config>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<config>", "top level must be an object");

  ExperimentConfig config;
  const ordered_json& problem = require_field(j, "problem", "");
  if (!problem.is_string()) throw ConfigError("problem", "must be a string");
  config.problem_id = problem.get<std::string>();

  config.n = static_cast<Eigen::Index>(read_positive_int(require_field(j, "n", ""), "n"));
  config.replications = static_cast<int>(
      read_positive_int(require_field(j, "replications", ""), "replications"));
  config.base_seed = read_seed(require_field(j, "base_seed", ""), "base_seed");

  const ordered_json& estimators = require_field(j, "estimators", "");
  if (!estimators.is_array() || estimators.empty()) {
    throw ConfigError("estimators", "must be a nonempty array");
  }
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    config.estimators.push_back(
        parse_estimator(estimators[i], "estimators[" + std::to_string(i) + "]"));
  }
  assign_labels(config.estimators);

  if (auto it = j.find("output"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("output", "must be a string");
    config.output_path = it->get<std::string>();
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

void validate_config(const ExperimentConfig& config) {
  const MomentProblem* problem = nullptr;
  try {
    problem = &get_problem(config.problem_id);
  } catch (const RegistryError& e) {
    throw ConfigError("problem", e.what());
  }
  if (!problem->sampler) {
    throw ConfigError("problem", "problem '" + config.problem_id + "' has no sampler");
  }
  const Eigen::Index min_n = std::max<Eigen::Index>(2, problem->k + 1);
  if (config.n < min_n) {
    throw ConfigError("n", "must be >= max(2, k+1) = " + std::to_string(min_n));
  }
  if (config.replications < 1) throw ConfigError("replications", "must be >= 1");
  for (std::size_t i = 0; i < config.estimators.size(); ++i) {
    const auto& spec = config.estimators[i];
    const std::string prefix = "estimators[" + std::to_string(i) + "]";
    if (spec.kind == EstimatorSpec::Kind::Gel) {
      try {
        get_divergence(spec.divergence);
      } catch (const RegistryError& e) {
        throw ConfigError(prefix + ".divergence", e.what());
      }
    }
    if (spec.weight) {
      if (spec.weight->rows() != problem->k || spec.weight->cols() != problem->k) {
        throw ConfigError(prefix + ".weight",
                          "must be k x k = " + std::to_string(problem->k) + " x " +
                              std::to_string(problem->k));
      }
      try {
        validate_weight_matrix(*spec.weight);
      } catch (const Error& e) {
        throw ConfigError(prefix + ".weight", e.what());
      }
    }
  }
}

std::vector<ReplicationRow> replicate(const ExperimentConfig& config,
                                      const GmmOptions& gmm_options,
                                      const GelOptions& gel_options) {
  validate_config(config);
  const MomentProblem& problem = get_problem(config.problem_id);
  const int R = config.replications;
  const int E = static_cast<int>(config.estimators.size());

  std::vector<ReplicationRow> rows(static_cast<std::size_t>(R) * E);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < R; ++r) {
    Sample sample;
    std::string sample_error;
    try {
      sample = problem.sampler(
          derive_seed(config.base_seed, static_cast<std::uint64_t>(r)), config.n);
    } catch (const std::exception& e) {
      sample_error = std::string("sampler: ") + e.what();
    }
    for (int e = 0; e < E; ++e) {
      ReplicationRow row;
      row.replication = r;
      row.estimator = config.estimators[e].label;
      if (!sample_error.empty()) {
        row.error = sample_error;
      } else {
        try {
          const EstimateResult res = run_estimator(config.estimators[e], problem,
                                                   sample, gmm_options, gel_options);
          row.theta = res.theta_hat;
          row.objective = res.objective;
          row.converged = res.converged;
          row.iterations = res.iterations;
        } catch (const std::exception& ex) {
          row.error = ex.what();
        }
      }
      rows[static_cast<std::size_t>(r) * E + e] = std::move(row);
    }
  }
  return rows;
}

VarianceEstimate empirical_variance(const std::vector<Eigen::VectorXd>& estimates,
                                    Eigen::Index n) {
  if (estimates.size() < 2) {
    throw Error("empirical_variance needs at least 2 estimates");
  }
  const Eigen::Index d = estimates.front().size();
  const double R = static_cast<double>(estimates.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& t : estimates) mean += t;
  mean /= R;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& t : estimates) {
    const Eigen::VectorXd c = t - mean;
    cov += c * c.transpose();
  }
  cov /= (R - 1.0);

  VarianceEstimate out;
  out.n_cov = static_cast<double>(n) * cov;
  out.std_err = out.n_cov.cwiseAbs() * std::sqrt(2.0 / R);
  out.used = static_cast<int>(estimates.size());
  return out;
}

MonteCarloReport summarize(const ExperimentConfig& config,
                           const std::vector<ReplicationRow>& rows,
                           bool with_timestamp) {
  const MomentProblem& problem = get_problem(config.problem_id);
  MonteCarloReport report;
  report.problem_id = config.problem_id;
  report.n = config.n;
  report.replications = config.replications;
  report.base_seed = config.base_seed;
  if (with_timestamp) report.timestamp = utc_timestamp();

  // Bound matrices: analytic moments when the problem carries them, plug-in
  // on a large draw otherwise.
  std::optional<Eigen::MatrixXd> D, V;
  if (problem.analytic_jacobian && problem.analytic_second_moment) {
    D = *problem.analytic_jacobian;
    V = *problem.analytic_second_moment;
  } else if (problem.sampler && problem.true_theta) {
    const Sample draw = problem.sampler(
        derive_seed(config.base_seed, kBoundsDrawTag), kBoundsDrawSize);
    D = eval_jacobian(problem, *problem.true_theta, draw);
    V = eval_second_moment(problem, *problem.true_theta, draw);
  }
  if (D && V) report.bounds = make_bounds_report(*D, *V);

  for (const auto& spec : config.estimators) {
    EstimatorSummary summary;
    summary.label = spec.label;
    std::vector<Eigen::VectorXd> thetas;
    for (const auto& row : rows) {
      if (row.estimator != spec.label) continue;
      if (row.error.empty() && row.theta) {
        thetas.push_back(*row.theta);
      } else {
        ++summary.failures;
      }
    }
    if (!thetas.empty()) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(problem.d);
      for (const auto& t : thetas) mean += t;
      summary.mean_theta = mean / static_cast<double>(thetas.size());
    }
    if (thetas.size() >= 2) {
      summary.variance = empirical_variance(thetas, config.n);
    }
    if (report.bounds) {
      if (spec.kind == EstimatorSpec::Kind::GmmFixed) {
        const Eigen::MatrixXd M =
            spec.weight ? *spec.weight
                        : Eigen::MatrixXd::Identity(problem.k, problem.k);
        summary.bound = gmm_bound(*D, *V, M);
      } else {
        summary.bound = report.bounds->B;
      }
    }
    report.estimators.push_back(std::move(summary));
  }
  return report;
}

void write_estimates_csv(const ExperimentConfig& config,
                         const std::vector<ReplicationRow>& rows,
                         std::ostream& out) {
  const MomentProblem& problem = get_problem(config.problem_id);
  out << "replication,estimator,converged,iterations,objective";
  for (Eigen::Index j = 0; j < problem.d; ++j) out << ",theta_" << j;
  out << ",error\n";
  for (const auto& row : rows) {
    out << row.replication << ',' << detail::csv_escape(row.estimator) << ','
        << (row.converged ? 1 : 0) << ',' << row.iterations << ',';
    if (row.error.empty()) out << detail::format_g17(row.objective);
    for (Eigen::Index j = 0; j < problem.d; ++j) {
      out << ',';
      if (row.error.empty() && row.theta && j < row.theta->size()) {
        out << detail::format_g17((*row.theta)[j]);
      }
    }
    out << ',' << detail::csv_escape(row.error) << '\n';
  }
}

void write_report_json(const MonteCarloReport& report, std::ostream& out) {
  ordered_json j;
  j["problem"] = report.problem_id;
  j["n"] = report.n;
  j["replications"] = report.replications;
  j["base_seed"] = report.base_seed;
  if (!report.timestamp.empty()) j["generated_at"] = report.timestamp;
  if (report.bounds) {
    ordered_json b;
    b["D"] = matrix_to_json(report.bounds->D);
    b["V"] = matrix_to_json(report.bounds->V);
    b["B"] = matrix_to_json(report.bounds->B);
    j["bounds"] = b;
  } else {
    j["bounds"] = nullptr;
  }
  j["estimators"] = ordered_json::array();
  for (const auto& s : report.estimators) {
    ordered_json e;
    e["label"] = s.label;
    e["failures"] = s.failures;
    e["mean_theta"] =
        s.mean_theta.size() > 0 ? vector_to_json(s.mean_theta) : ordered_json(nullptr);
    if (s.variance.used >= 2) {
      e["n_cov"] = matrix_to_json(s.variance.n_cov);
      e["n_cov_se"] = matrix_to_json(s.variance.std_err);
      e["used"] = s.variance.used;
    } else {
      e["n_cov"] = nullptr;
      e["n_cov_se"] = nullptr;
      e["used"] = s.variance.used;
    }
    e["bound"] = s.bound ? matrix_to_json(*s.bound) : ordered_json(nullptr);
    j["estimators"].push_back(e);
  }
  out << j.dump(2) << '\n';
}

int run_experiment(const std::string& config_path, const RunOptions& options,
                   std::ostream& diagnostics) {
  try {
    ExperimentConfig config = load_experiment_config(config_path);
    if (options.seed_override) config.base_seed = *options.seed_override;
    if (options.out_override) config.output_path = *options.out_override;
    if (config.output_path.empty()) {
      throw ConfigError("output", "missing output path (set \"output\" or pass --out)");
    }
    validate_config(config);

    GmmOptions gmm_options;
    gmm_options.uncentered_cue = options.uncentered;
    const std::vector<ReplicationRow> rows = replicate(config, gmm_options, {});
    const MonteCarloReport report = summarize(config, rows, !options.no_timestamp);

    const std::filesystem::path out_prefix(config.output_path);
    if (out_prefix.has_parent_path()) {
      std::filesystem::create_directories(out_prefix.parent_path());
    }
    {
      std::ofstream csv(config.output_path + ".csv", std::ios::binary);
      if (!csv) throw Error("cannot write '" + config.output_path + ".csv'");
      write_estimates_csv(config, rows, csv);
    }
    {
      std::ofstream js(config.output_path + ".json", std::ios::binary);
      if (!js) throw Error("cannot write '" + config.output_path + ".json'");
      write_report_json(report, js);
    }
    diagnostics << "wrote " << config.output_path << ".csv and "
                << config.output_path << ".json\n";

    for (const auto& s : report.estimators) {
      const double rate =
          static_cast<double>(s.failures) / static_cast<double>(config.replications);
      if (rate > 0.20) {
        diagnostics << "systematic failure: estimator '" << s.label << "' failed "
                    << s.failures << "/" << config.replications << " replications\n";
        return 2;
      }
    }
    return 0;
  } catch (const ConfigError& e) {
    diagnostics << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    diagnostics << "error: " << e.what() << '\n';
    return 1;
  }
}

RateExperimentConfig parse_rate_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<config>", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<config>", "top level must be an object");

  RateExperimentConfig config;
  const ordered_json& problem = require_field(j, "problem", "");
  if (!problem.is_string()) throw ConfigError("problem", "must be a string");
  config.problem_id = problem.get<std::string>();

  const ordered_json& family = require_field(j, "family", "");
  if (!family.is_string()) throw ConfigError("family", "must be a string");
  config.family = family.get<std::string>();

  const ordered_json& estimator = require_field(j, "estimator", "");
  if (!estimator.is_string()) throw ConfigError("estimator", "must be a string");
  const std::string est = estimator.get<std::string>();
  if (est == "two-step") {
    config.estimator = ApproxEstimator::TwoStep;
  } else if (est == "cue") {
    config.estimator = ApproxEstimator::Cue;
  } else {
    throw ConfigError("estimator", "must be \"two-step\" or \"cue\"");
  }

  if (auto it = j.find("phi_rate"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("phi_rate", "must be a string");
    config.phi_rate = it->get<std::string>();
    if (config.phi_rate != "m" && config.phi_rate != "m^2") {
      throw ConfigError("phi_rate", "must be \"m\" or \"m^2\"");
    }
  }

  config.n = static_cast<Eigen::Index>(read_positive_int(require_field(j, "n", ""), "n"));
  config.replications = static_cast<int>(
      read_positive_int(require_field(j, "replications", ""), "replications"));
  config.base_seed = read_seed(require_field(j, "base_seed", ""), "base_seed");

  const ordered_json& grid = require_field(j, "m_grid", "");
  if (!grid.is_array() || grid.empty()) {
    throw ConfigError("m_grid", "must be a nonempty array");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string field = "m_grid[" + std::to_string(i) + "]";
    config.m_grid.push_back(read_seed(grid[i], field));
    if (config.m_grid.back() < 1) throw ConfigError(field, "levels must be >= 1");
  }

  if (auto it = j.find("output"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("output", "must be a string");
    config.output_path = it->get<std::string>();
  }
  return config;
}

RateExperimentConfig load_rate_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rate_config(ss.str());
}

int run_rate_experiment(const std::string& config_path, const RunOptions& options,
                        std::ostream& diagnostics) {
  try {
    RateExperimentConfig config = load_rate_config(config_path);
    if (options.seed_override) config.base_seed = *options.seed_override;
    if (options.out_override) config.output_path = *options.out_override;
    if (config.output_path.empty()) {
      throw ConfigError("output", "missing output path (set \"output\" or pass --out)");
    }

    const MomentProblem* problem = nullptr;
    try {
      problem = &get_problem(config.problem_id);
    } catch (const RegistryError& e) {
      throw ConfigError("problem", e.what());
    }
    RateFn rate;
    if (config.phi_rate == "m") {
      rate = [](std::uint64_t m) { return static_cast<double>(m); };
    } else if (config.phi_rate == "m^2") {
      rate = [](std::uint64_t m) {
        return static_cast<double>(m) * static_cast<double>(m);
      };
    }
    ApproximateProblem aproblem;
    try {
      aproblem = perturb_constraint(*problem, config.family, rate);
    } catch (const RegistryError& e) {
      throw ConfigError("family", e.what());
    }

    GmmOptions gmm_options;
    gmm_options.uncentered_cue = options.uncentered;
    const RateTable table =
        rate_experiment(aproblem, config.estimator, config.n, config.m_grid,
                        config.replications, config.base_seed, gmm_options);

    const std::filesystem::path out_prefix(config.output_path);
    if (out_prefix.has_parent_path()) {
      std::filesystem::create_directories(out_prefix.parent_path());
    }
    {
      std::ofstream csv(config.output_path + ".csv", std::ios::binary);
      if (!csv) throw Error("cannot write '" + config.output_path + ".csv'");
      write_rate_csv(table, csv);
    }
    {
      ordered_json j;
      j["problem"] = config.problem_id;
      j["family"] = config.family;
      j["estimator"] =
          config.estimator == ApproxEstimator::TwoStep ? "two-step" : "cue";
      j["n"] = table.n;
      j["replications"] = table.replications;
      j["base_seed"] = table.base_seed;
      if (!options.no_timestamp) j["generated_at"] = utc_timestamp();
      j["loglog_slope"] = table.loglog_slope;
      j["cells"] = ordered_json::array();
      for (const auto& cell : table.cells) {
        ordered_json c;
        c["m"] = cell.m;
        c["phi_m"] = cell.phi_m;
        c["mean_sq_diff"] = cell.mean_sq_diff;
        c["stderr"] = cell.std_error;
        c["n_var_theta_m"] = cell.n_var_theta_m;
        c["failures"] = cell.failures;
        c["flagged"] = cell.flagged;
        j["cells"].push_back(c);
      }
      std::ofstream js(config.output_path + ".json", std::ios::binary);
      if (!js) throw Error("cannot write '" + config.output_path + ".json'");
      js << j.dump(2) << '\n';
    }
    diagnostics << "wrote " << config.output_path << ".csv and "
                << config.output_path << ".json\n";
    return 0;
  } catch (const ConfigError& e) {
    diagnostics << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    diagnostics << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace momest
