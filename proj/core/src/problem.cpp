#include "momest/problem.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "momest/eval.hpp"
#include "momest/rng.hpp"

namespace momest {

bool MomentProblem::in_box(const Eigen::VectorXd& theta) const {
  if (theta.size() != d) return false;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (theta[j] < theta_box(j, 0) || theta[j] > theta_box(j, 1)) return false;
  }
  return true;
}

Eigen::VectorXd MomentProblem::clamp_to_box(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out = theta;
  for (Eigen::Index j = 0; j < d; ++j) {
    out[j] = std::min(std::max(out[j], theta_box(j, 0)), theta_box(j, 1));
  }
  return out;
}

Eigen::VectorXd MomentProblem::box_center() const {
  return 0.5 * (theta_box.col(0) + theta_box.col(1));
}

namespace {

MomentProblem make_normal_mean() {
  MomentProblem p;
  p.d = 1;
  p.k = 2;
  p.x_dim = 1;
  p.theta_box.resize(1, 2);
  p.theta_box << -3.0, 3.0;
  p.phi = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    Eigen::VectorXd v(2);
    const double t = theta[0], xi = x[0];
    v[0] = xi - t;
    v[1] = xi * xi - t * t - 1.0;
    return v;
  };
  p.dphi = [](const Eigen::VectorXd& theta, const Eigen::VectorXd&) {
    Eigen::MatrixXd j(1, 2);
    j(0, 0) = -1.0;
    j(0, 1) = -2.0 * theta[0];
    return j;
  };
  p.phi_batch = [](const Eigen::VectorXd& theta, const Eigen::MatrixXd& obs) {
    const double t = theta[0];
    const double tt = t * t;
    Eigen::MatrixXd v(2, obs.rows());
    const auto x = obs.col(0).transpose().array();
    v.row(0) = x - t;
    v.row(1) = x * x - tt - 1.0;
    return v;
  };
  p.dphi_batch = [](const Eigen::VectorXd& theta, const Eigen::MatrixXd& obs) {
    Eigen::MatrixXd j(2, obs.rows());
    j.row(0).setConstant(-1.0);
    j.row(1).setConstant(-2.0 * theta[0]);
    return j;
  };
  p.true_theta = Eigen::VectorXd::Constant(1, 1.0);
  p.sampler = [](std::uint64_t seed, Eigen::Index n) {
    Rng rng(seed);
    Sample s;
    s.observations.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) s.observations(i, 0) = 1.0 + rng.next_normal();
    return s;
  };
  // Moments of phi at theta0 = 1 under N(1, 1).
  Eigen::MatrixXd D(1, 2);
  D << -1.0, -2.0;
  Eigen::MatrixXd V(2, 2);
  V << 1.0, 2.0, 2.0, 6.0;
  p.analytic_jacobian = D;
  p.analytic_second_moment = V;
  return p;
}

MomentProblem make_mean_1d() {
  MomentProblem p;
  p.d = 1;
  p.k = 1;
  p.x_dim = 1;
  p.theta_box.resize(1, 2);
  p.theta_box << -3.0, 3.0;
  p.phi = [](const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, x[0] - theta[0]).eval();
  };
  p.dphi = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -1.0).eval();
  };
  p.phi_batch = [](const Eigen::VectorXd& theta, const Eigen::MatrixXd& obs) {
    Eigen::MatrixXd v(1, obs.rows());
    v.row(0) = obs.col(0).transpose().array() - theta[0];
    return v;
  };
  p.dphi_batch = [](const Eigen::VectorXd&, const Eigen::MatrixXd& obs) {
    return Eigen::MatrixXd::Constant(1, obs.rows(), -1.0).eval();
  };
  p.true_theta = Eigen::VectorXd::Constant(1, 1.0);
  p.sampler = [](std::uint64_t seed, Eigen::Index n) {
    Rng rng(seed);
    Sample s;
    s.observations.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) s.observations(i, 0) = 1.0 + rng.next_normal();
    return s;
  };
  p.analytic_jacobian = Eigen::MatrixXd::Constant(1, 1, -1.0);
  p.analytic_second_moment = Eigen::MatrixXd::Constant(1, 1, 1.0);
  return p;
}

std::map<std::string, MomentProblem>& registry() {
  static std::map<std::string, MomentProblem> problems = [] {
    std::map<std::string, MomentProblem> m;
    m.emplace("normal-mean", make_normal_mean());
    m.emplace("mean-1d", make_mean_1d());
    return m;
  }();
  return problems;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const MomentProblem& get_problem(const std::string& id) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(id);
  if (it == registry().end()) {
    throw RegistryError("unknown problem id '" + id + "'");
  }
  return it->second;
}

std::vector<std::string> registered_problems() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> ids;
  for (const auto& [id, _] : registry()) ids.push_back(id);
  return ids;
}

void register_problem(const std::string& id, MomentProblem problem) {
  std::lock_guard lock(registry_mutex());
  registry().insert_or_assign(id, std::move(problem));
}

namespace {

std::string index_str(Eigen::Index j) {
  std::ostringstream os;
  os << j;
  return os.str();
}

}  // namespace

void validate_problem(const MomentProblem& problem, std::uint64_t seed,
                      int probes) {
  if (problem.d < 1) throw Error("parameter dimension d must be positive");
  if (problem.k < problem.d) {
    throw Error("moment dimension k must be >= parameter dimension d");
  }
  if (problem.x_dim < 1) throw Error("observation dimension must be positive");
  if (problem.theta_box.rows() != problem.d) {
    throw Error("theta_box must have one [lo, hi] row per parameter");
  }
  for (Eigen::Index j = 0; j < problem.d; ++j) {
    const double lo = problem.theta_box(j, 0), hi = problem.theta_box(j, 1);
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
      throw Error("theta_box row " + index_str(j) + " is not a bounded nonempty interval");
    }
  }
  if (!problem.phi || !problem.dphi) throw Error("phi and dphi must be set");
  if (problem.true_theta) {
    const auto& t0 = *problem.true_theta;
    if (t0.size() != problem.d) throw Error("true_theta has wrong dimension");
    for (Eigen::Index j = 0; j < problem.d; ++j) {
      if (!(t0[j] > problem.theta_box(j, 0) && t0[j] < problem.theta_box(j, 1))) {
        throw Error("true_theta must lie strictly inside theta_box");
      }
    }
  }

  // Finite-difference probe of dphi against phi at random interior points.
  Rng rng(mix64(seed));
  const double h0 = std::cbrt(2.2e-16);
  for (int p = 0; p < probes; ++p) {
    Eigen::VectorXd theta(problem.d);
    for (Eigen::Index j = 0; j < problem.d; ++j) {
      const double lo = problem.theta_box(j, 0), hi = problem.theta_box(j, 1);
      const double margin = 0.05 * (hi - lo);
      theta[j] = lo + margin + (hi - lo - 2 * margin) * rng.next_uniform();
    }
    Eigen::VectorXd x(problem.x_dim);
    for (Eigen::Index j = 0; j < problem.x_dim; ++j) x[j] = rng.next_normal();

    const Eigen::MatrixXd analytic = problem.dphi(theta, x);
    if (analytic.rows() != problem.d || analytic.cols() != problem.k) {
      throw Error("dphi must return a d x k matrix");
    }
    Eigen::MatrixXd fd(problem.d, problem.k);
    for (Eigen::Index j = 0; j < problem.d; ++j) {
      const double h = h0 * std::max(1.0, std::abs(theta[j]));
      Eigen::VectorXd tp = theta, tm = theta;
      tp[j] += h;
      tm[j] -= h;
      fd.row(j) = (problem.phi(tp, x) - problem.phi(tm, x)).transpose() / (2.0 * h);
    }
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    const double err = (fd - analytic).cwiseAbs().maxCoeff() / scale;
    if (!(err < 1e-6)) {
      throw Error("dphi disagrees with finite differences of phi (relative error " +
                  std::to_string(err) + ")");
    }
  }

  // Batch forms, when present, must agree with the per-point functions.
  if (problem.phi_batch || problem.dphi_batch) {
    Sample probe;
    probe.observations.resize(7, problem.x_dim);
    for (Eigen::Index i = 0; i < probe.n(); ++i) {
      for (Eigen::Index j = 0; j < problem.x_dim; ++j) {
        probe.observations(i, j) = rng.next_normal();
      }
    }
    const Eigen::VectorXd theta = problem.clamp_to_box(
        problem.true_theta ? *problem.true_theta : problem.box_center());
    if (problem.phi_batch) {
      const Eigen::MatrixXd batch = problem.phi_batch(theta, probe.observations);
      if (batch.rows() != problem.k || batch.cols() != probe.n()) {
        throw Error("phi_batch must return a k x n matrix");
      }
      for (Eigen::Index i = 0; i < probe.n(); ++i) {
        const Eigen::VectorXd v = problem.phi(theta, probe.observations.row(i).transpose());
        if ((batch.col(i) - v).cwiseAbs().maxCoeff() >
            1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
          throw Error("phi_batch disagrees with phi");
        }
      }
    }
    if (problem.dphi_batch) {
      const Eigen::MatrixXd batch = problem.dphi_batch(theta, probe.observations);
      if (batch.rows() != problem.d * problem.k || batch.cols() != probe.n()) {
        throw Error("dphi_batch must return a (d*k) x n matrix");
      }
      for (Eigen::Index i = 0; i < probe.n(); ++i) {
        const Eigen::MatrixXd j = problem.dphi(theta, probe.observations.row(i).transpose());
        const Eigen::Map<const Eigen::VectorXd> flat(j.data(), problem.d * problem.k);
        if ((batch.col(i) - flat).cwiseAbs().maxCoeff() >
            1e-12 * std::max(1.0, flat.cwiseAbs().maxCoeff())) {
          throw Error("dphi_batch disagrees with dphi");
        }
      }
    }
  }

  // Statistical check: the sample mean of phi(theta0, .) on a large draw is
  // within 6 standard errors of zero, coordinate-wise.
  if (problem.sampler && problem.true_theta) {
    const Eigen::Index n = 20000;
    const Sample s = problem.sampler(derive_seed(seed, 0x76616c6964ull), n);
    const MomentSummary ms = eval_moment_summary(problem, *problem.true_theta, s);
    for (Eigen::Index l = 0; l < problem.k; ++l) {
      const double var = std::max(ms.second_moment(l, l) - ms.mean[l] * ms.mean[l], 0.0);
      const double se = std::sqrt(var / static_cast<double>(n));
      if (std::abs(ms.mean[l]) > 6.0 * se + 1e-12) {
        throw Error("sample mean of phi(true_theta) coordinate " + index_str(l) +
                    " is not statistically zero");
      }
    }
  }
}

}  // namespace momest
