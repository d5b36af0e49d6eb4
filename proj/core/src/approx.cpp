#include "momest/approx.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>

#include <Eigen/Dense>

#include "csv_util.hpp"
#include "momest/rng.hpp"

namespace momest {

namespace {

// Bounded smooth perturbation direction shared by the families, shaped to
// the problem's moment dimension. For the canonical k = 2 case this is
// (sin(a + b), cos(a b)) with a = sum(theta), b = sum(x).
Eigen::VectorXd h_direction(Eigen::Index k, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x) {
  const double a = theta.sum();
  const double b = x.sum();
  Eigen::VectorXd h(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j == 0) {
      h[j] = std::sin(a + b);
    } else if (j == 1) {
      h[j] = std::cos(a * b);
    } else {
      h[j] = std::sin(a + b + static_cast<double>(j));
    }
  }
  return h;
}

// d h / d theta, d x k; every theta coordinate enters through a = sum(theta).
Eigen::MatrixXd h_jacobian(Eigen::Index d, Eigen::Index k,
                           const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& x) {
  const double a = theta.sum();
  const double b = x.sum();
  Eigen::RowVectorXd row(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j == 0) {
      row[j] = std::cos(a + b);
    } else if (j == 1) {
      row[j] = -b * std::sin(a * b);
    } else {
      row[j] = std::cos(a + b + static_cast<double>(j));
    }
  }
  return row.replicate(d, 1);
}

// Batch forms of the perturbation direction, one observation per column.
Eigen::MatrixXd h_direction_batch(Eigen::Index k, const Eigen::VectorXd& theta,
                                  const Eigen::MatrixXd& obs) {
  const double a = theta.sum();
  const Eigen::ArrayXd b = obs.rowwise().sum().array();
  Eigen::MatrixXd h(k, obs.rows());
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j == 0) {
      h.row(j) = (a + b).sin().transpose();
    } else if (j == 1) {
      h.row(j) = (a * b).cos().transpose();
    } else {
      h.row(j) = (a + b + static_cast<double>(j)).sin().transpose();
    }
  }
  return h;
}

Eigen::MatrixXd h_jacobian_batch(Eigen::Index d, Eigen::Index k,
                                 const Eigen::VectorXd& theta,
                                 const Eigen::MatrixXd& obs) {
  const double a = theta.sum();
  const Eigen::ArrayXd b = obs.rowwise().sum().array();
  Eigen::MatrixXd flat(d * k, obs.rows());
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::RowVectorXd row;
    if (j == 0) {
      row = (a + b).cos().transpose();
    } else if (j == 1) {
      row = (-b * (a * b).sin()).transpose();
    } else {
      row = (a + b + static_cast<double>(j)).cos().transpose();
    }
    // Column-major flattening of a d x k matrix whose rows are identical.
    for (Eigen::Index t = 0; t < d; ++t) flat.row(j * d + t) = row;
  }
  return flat;
}

// Midpoint-rule error for the unit integral of sin(pi u): the quadrature
// family's level-m perturbation size, O(m^-2).
double midpoint_error(std::uint64_t m) {
  const double dm = static_cast<double>(m);
  double sum = 0.0;
  for (std::uint64_t i = 0; i < m; ++i) {
    sum += std::sin(std::numbers::pi * (static_cast<double>(i) + 0.5) / dm);
  }
  return sum / dm - 2.0 / std::numbers::pi;
}

enum class FamilyKind { Zero, SmoothTrig, Quadrature };

FamilyKind family_kind(const std::string& family) {
  if (family == "zero") return FamilyKind::Zero;
  if (family == "smooth-trig") return FamilyKind::SmoothTrig;
  if (family == "quadrature") return FamilyKind::Quadrature;
  throw RegistryError("unknown perturbation family '" + family + "'");
}

// phi_m = phi + c * h with the family's level-m coefficient c.
double level_coefficient(FamilyKind kind, const RateFn& rate, std::uint64_t m) {
  switch (kind) {
    case FamilyKind::Zero:
      return 0.0;
    case FamilyKind::SmoothTrig:
      return 1.0 / rate(m);
    case FamilyKind::Quadrature:
      return midpoint_error(m);
  }
  return 0.0;
}

MomentFn perturbed_phi(const MomentProblem& base, double c) {
  return [phi = base.phi, k = base.k, c](const Eigen::VectorXd& theta,
                                         const Eigen::VectorXd& x) {
    return (phi(theta, x) + c * h_direction(k, theta, x)).eval();
  };
}

JacobianFn perturbed_dphi(const MomentProblem& base, double c) {
  return [dphi = base.dphi, d = base.d, k = base.k, c](
             const Eigen::VectorXd& theta, const Eigen::VectorXd& x) {
    return (dphi(theta, x) + c * h_jacobian(d, k, theta, x)).eval();
  };
}

}  // namespace

MomentProblem ApproximateProblem::at_level(std::uint64_t m) const {
  const FamilyKind kind = family_kind(family);
  if (m == kExactLevel || kind == FamilyKind::Zero) return base;
  const double c = level_coefficient(kind, rate, m);
  MomentProblem p = base;
  p.phi = perturbed_phi(base, c);
  p.dphi = perturbed_dphi(base, c);
  // The base batch paths do not see the perturbation; replace or drop them.
  if (base.phi_batch) {
    p.phi_batch = [batch = base.phi_batch, k = base.k, c](
                      const Eigen::VectorXd& theta, const Eigen::MatrixXd& obs) {
      return (batch(theta, obs) + c * h_direction_batch(k, theta, obs)).eval();
    };
  }
  if (base.dphi_batch) {
    p.dphi_batch = [batch = base.dphi_batch, d = base.d, k = base.k, c](
                       const Eigen::VectorXd& theta, const Eigen::MatrixXd& obs) {
      return (batch(theta, obs) + c * h_jacobian_batch(d, k, theta, obs)).eval();
    };
  }
  return p;
}

ApproximateProblem perturb_constraint(const MomentProblem& problem,
                                      const std::string& family, RateFn rate) {
  const FamilyKind kind = family_kind(family);

  ApproximateProblem ap;
  ap.base = problem;
  ap.family = family;
  if (rate) {
    ap.rate = std::move(rate);
  } else if (kind == FamilyKind::Quadrature) {
    ap.rate = [](std::uint64_t m) {
      return static_cast<double>(m) * static_cast<double>(m);
    };
  } else {
    ap.rate = [](std::uint64_t m) { return static_cast<double>(m); };
  }

  if (kind == FamilyKind::Zero) {
    ap.phi_m = [phi = problem.phi](std::uint64_t, const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& x) { return phi(theta, x); };
    ap.dphi_m = [dphi = problem.dphi](std::uint64_t, const Eigen::VectorXd& theta,
                                      const Eigen::VectorXd& x) { return dphi(theta, x); };
    return ap;
  }

  ap.phi_m = [base = problem, kind, r = ap.rate](std::uint64_t m,
                                                 const Eigen::VectorXd& theta,
                                                 const Eigen::VectorXd& x) {
    if (m == kExactLevel) return base.phi(theta, x);
    return perturbed_phi(base, level_coefficient(kind, r, m))(theta, x);
  };
  ap.dphi_m = [base = problem, kind, r = ap.rate](std::uint64_t m,
                                                  const Eigen::VectorXd& theta,
                                                  const Eigen::VectorXd& x) {
    if (m == kExactLevel) return base.dphi(theta, x);
    return perturbed_dphi(base, level_coefficient(kind, r, m))(theta, x);
  };
  return ap;
}

std::vector<std::string> registered_perturbation_families() {
  return {"zero", "smooth-trig", "quadrature"};
}

EstimateResult approx_two_step(const ApproximateProblem& aproblem,
                               std::uint64_t m, const Sample& sample,
                               const GmmOptions& options) {
  return gmm_two_step(aproblem.at_level(m), sample, options);
}

EstimateResult approx_cue(const ApproximateProblem& aproblem, std::uint64_t m,
                          const Sample& sample, const GmmOptions& options) {
  return cue(aproblem.at_level(m), sample, options);
}

RateTable rate_experiment(const ApproximateProblem& aproblem,
                          ApproxEstimator kind, Eigen::Index n,
                          const std::vector<std::uint64_t>& m_grid,
                          int replications, std::uint64_t base_seed,
                          const GmmOptions& options) {
  if (!aproblem.base.sampler) {
    throw Error("rate_experiment needs a problem with a sampler");
  }
  if (m_grid.empty()) throw ConfigError("m_grid", "must be nonempty");
  for (std::size_t i = 1; i < m_grid.size(); ++i) {
    if (m_grid[i] <= m_grid[i - 1]) {
      throw ConfigError("m_grid", "must be strictly increasing");
    }
  }
  if (replications < 100) throw ConfigError("replications", "must be >= 100");

  const std::size_t levels_count = m_grid.size();
  const int R = replications;

  std::vector<MomentProblem> leveled;
  leveled.reserve(levels_count);
  for (const auto m : m_grid) leveled.push_back(aproblem.at_level(m));

  const auto estimate = [&](const MomentProblem& p,
                            const Sample& s) -> std::optional<Eigen::VectorXd> {
    try {
      const EstimateResult r = kind == ApproxEstimator::TwoStep
                                   ? gmm_two_step(p, s, options)
                                   : cue(p, s, options);
      return r.theta_hat;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  std::vector<std::optional<Eigen::VectorXd>> exact(R);
  std::vector<std::vector<std::optional<Eigen::VectorXd>>> approx(
      R, std::vector<std::optional<Eigen::VectorXd>>(levels_count));

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < R; ++r) {
    try {
      // Paired: theta_m and theta share the sample within a replication.
      const Sample s = aproblem.base.sampler(
          derive_seed(base_seed, static_cast<std::uint64_t>(r)), n);
      exact[r] = estimate(aproblem.base, s);
      for (std::size_t l = 0; l < levels_count; ++l) {
        approx[r][l] = estimate(leveled[l], s);
      }
    } catch (...) {
      exact[r] = std::nullopt;
    }
  }

  RateTable table;
  table.n = n;
  table.replications = R;
  table.base_seed = base_seed;

  std::vector<double> log_rate, log_msd;
  for (std::size_t l = 0; l < levels_count; ++l) {
    RateCell cell;
    cell.m = m_grid[l];
    cell.phi_m = aproblem.rate(m_grid[l]);

    std::vector<double> sq_diffs;
    std::vector<Eigen::VectorXd> thetas;
    for (int r = 0; r < R; ++r) {
      if (approx[r][l]) thetas.push_back(*approx[r][l]);
      if (exact[r] && approx[r][l]) {
        sq_diffs.push_back((*approx[r][l] - *exact[r]).squaredNorm());
      }
    }
    cell.failures = R - static_cast<int>(sq_diffs.size());
    cell.flagged = cell.failures > 0.05 * R;

    if (!sq_diffs.empty()) {
      const double count = static_cast<double>(sq_diffs.size());
      double mean = 0.0;
      for (const double v : sq_diffs) mean += v;
      mean /= count;
      double var = 0.0;
      for (const double v : sq_diffs) var += (v - mean) * (v - mean);
      var = sq_diffs.size() > 1 ? var / (count - 1.0) : 0.0;
      cell.mean_sq_diff = mean;
      cell.std_error = std::sqrt(var / count);
    }
    if (thetas.size() > 1) {
      const double count = static_cast<double>(thetas.size());
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(aproblem.base.d);
      for (const auto& t : thetas) mean += t;
      mean /= count;
      double trace = 0.0;
      for (const auto& t : thetas) trace += (t - mean).squaredNorm();
      trace /= (count - 1.0);
      cell.n_var_theta_m = static_cast<double>(n) * trace;
    }

    if (cell.mean_sq_diff > 0.0 && cell.failures < R) {
      log_rate.push_back(std::log(cell.phi_m));
      log_msd.push_back(std::log(cell.mean_sq_diff));
    }
    table.cells.push_back(cell);
  }

  // Log-log OLS slope of the mean squared difference on the rate.
  if (log_rate.size() >= 2) {
    const double count = static_cast<double>(log_rate.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < log_rate.size(); ++i) {
      mx += log_rate[i];
      my += log_msd[i];
    }
    mx /= count;
    my /= count;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < log_rate.size(); ++i) {
      sxy += (log_rate[i] - mx) * (log_msd[i] - my);
      sxx += (log_rate[i] - mx) * (log_rate[i] - mx);
    }
    table.loglog_slope = sxy / sxx;
  } else {
    table.loglog_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

void write_rate_csv(const RateTable& table, std::ostream& out) {
  out << "m,phi_m,mean_sq_diff,stderr,n_var_theta_m,failures\n";
  for (const auto& cell : table.cells) {
    out << cell.m << ',' << detail::format_g17(cell.phi_m) << ','
        << detail::format_g17(cell.mean_sq_diff) << ','
        << detail::format_g17(cell.std_error) << ','
        << detail::format_g17(cell.n_var_theta_m) << ',' << cell.failures
        << '\n';
  }
}

ApproximationProbe probe_approximation(const ApproximateProblem& aproblem,
                                       std::uint64_t m, int theta_points,
                                       int x_points, double x_radius) {
  const MomentProblem& base = aproblem.base;
  const double rate = aproblem.rate(m);
  ApproximationProbe probe;

  Rng rng(0xA7u);
  for (int it = 0; it < theta_points; ++it) {
    Eigen::VectorXd theta(base.d);
    for (Eigen::Index j = 0; j < base.d; ++j) {
      const double lo = base.theta_box(j, 0), hi = base.theta_box(j, 1);
      theta[j] = theta_points > 1 ? lo + (hi - lo) * it / (theta_points - 1.0)
                                  : 0.5 * (lo + hi);
    }
    for (int ix = 0; ix < x_points; ++ix) {
      Eigen::VectorXd x(base.x_dim);
      for (Eigen::Index j = 0; j < base.x_dim; ++j) {
        x[j] = x_radius * (2.0 * rng.next_uniform() - 1.0);
      }
      const double dm =
          rate * (aproblem.phi_m(m, theta, x) - base.phi(theta, x)).norm();
      const double dj =
          rate * (aproblem.dphi_m(m, theta, x) - base.dphi(theta, x)).norm();
      probe.moment_sup = std::max(probe.moment_sup, dm);
      probe.jacobian_sup = std::max(probe.jacobian_sup, dj);
    }
  }
  return probe;
}

}  // namespace momest
