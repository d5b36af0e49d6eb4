#include "momest/divergence.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "pairwise.hpp"

namespace momest {

bool Divergence::in_f_domain(double x) const noexcept {
  return f_domain_open ? x > f_domain_min : x >= f_domain_min;
}

bool Divergence::in_conj_domain(double y) const noexcept {
  return y > conj_lo && y < conj_hi;
}

double conjugate(const Divergence& div, double y) {
  if (!div.in_conj_domain(y)) {
    throw DomainError("conjugate argument " + std::to_string(y) +
                      " outside the domain of f* for divergence '" + div.id + "'");
  }
  return div.f_conj(y);
}

double divergence_value(const Divergence& div, const Eigen::VectorXd& weights) {
  const Eigen::Index n = weights.size();
  if (n < 1) throw Error("empty weight vector");
  const double dn = static_cast<double>(n);
  Eigen::VectorXd values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = dn * weights[i];
    if (!div.in_f_domain(x)) {
      throw DomainError("weight " + std::to_string(weights[i]) +
                        " outside the domain of f for divergence '" + div.id + "'");
    }
    values[i] = div.f(x);
  }
  // Same fixed pairwise order as the moment evaluations.
  return detail::pairwise_sum(std::move(values)) / dn;
}

namespace {

Divergence make_el() {
  Divergence d;
  d.id = "el";
  d.f = [](double x) { return -std::log(x) + x - 1.0; };
  d.f_domain_min = 0.0;
  d.f_domain_open = true;
  d.f_conj = [](double y) { return -std::log1p(-y); };
  d.f_conj_deriv = [](double y) { return 1.0 / (1.0 - y); };
  d.f_conj_deriv2 = [](double y) { const double r = 1.0 / (1.0 - y); return r * r; };
  d.f_conj_fused = [](double y, double& value, double& deriv, double& deriv2) {
    value = -std::log1p(-y);
    deriv = 1.0 / (1.0 - y);
    deriv2 = deriv * deriv;
  };
  d.conj_hi = 1.0;
  return d;
}

Divergence make_et() {
  Divergence d;
  d.id = "et";
  d.f = [](double x) { return x > 0.0 ? x * std::log(x) - x + 1.0 : (x == 0.0 ? 1.0 : 0.0); };
  d.f_domain_min = 0.0;
  d.f_domain_open = false;
  d.f_conj = [](double y) { return std::expm1(y); };
  d.f_conj_deriv = [](double y) { return std::exp(y); };
  d.f_conj_deriv2 = [](double y) { return std::exp(y); };
  d.f_conj_fused = [](double y, double& value, double& deriv, double& deriv2) {
    value = std::expm1(y);
    deriv = value + 1.0;
    deriv2 = deriv;
  };
  return d;
}

Divergence make_euclidean() {
  Divergence d;
  d.id = "euclidean";
  d.f = [](double x) { const double u = x - 1.0; return 0.5 * u * u; };
  d.f_conj = [](double y) { return y + 0.5 * y * y; };
  d.f_conj_deriv = [](double y) { return 1.0 + y; };
  d.f_conj_deriv2 = [](double) { return 1.0; };
  d.f_conj_fused = [](double y, double& value, double& deriv, double& deriv2) {
    value = y + 0.5 * y * y;
    deriv = 1.0 + y;
    deriv2 = 1.0;
  };
  return d;
}

std::map<std::string, Divergence>& registry() {
  static std::map<std::string, Divergence> divs = [] {
    std::map<std::string, Divergence> m;
    m.emplace("el", make_el());
    m.emplace("et", make_et());
    m.emplace("euclidean", make_euclidean());
    return m;
  }();
  return divs;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const Divergence& get_divergence(const std::string& id) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(id);
  if (it == registry().end()) {
    throw RegistryError("unknown divergence id '" + id + "'");
  }
  return it->second;
}

std::vector<std::string> registered_divergences() {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> ids;
  for (const auto& [id, _] : registry()) ids.push_back(id);
  return ids;
}

void register_divergence(Divergence div) {
  validate_divergence(div);
  std::lock_guard lock(registry_mutex());
  registry().insert_or_assign(div.id, std::move(div));
}

void validate_divergence(const Divergence& div) {
  if (div.id.empty()) throw Error("divergence id must be nonempty");
  if (!div.f || !div.f_conj || !div.f_conj_deriv) {
    throw Error("divergence '" + div.id + "': f, f_conj and f_conj_deriv must be set");
  }
  if (std::abs(div.f(1.0)) > 1e-12) {
    throw Error("divergence '" + div.id + "': f(1) must be 0");
  }
  const double hf = 1e-6;
  const double fprime1 = (div.f(1.0 + hf) - div.f(1.0 - hf)) / (2.0 * hf);
  if (std::abs(fprime1) > 1e-6) {
    throw Error("divergence '" + div.id + "': f'(1) must be 0");
  }
  if (!div.in_conj_domain(0.0)) {
    throw Error("divergence '" + div.id + "': conjugate domain must contain 0");
  }
  if (std::abs(div.f_conj(0.0)) > 1e-12) {
    throw Error("divergence '" + div.id + "': f*(0) must be 0");
  }
  if (std::abs(div.f_conj_deriv(0.0) - 1.0) > 1e-8) {
    throw Error("divergence '" + div.id + "': f*'(0) must be 1");
  }

  // Convexity and derivative consistency of f* on a grid inside the domain.
  const double lo = std::max(div.conj_lo, -4.0);
  const double hi = std::min(div.conj_hi, 4.0);
  const double margin = 1e-3 * (hi - lo);
  const int grid = 41;
  const double h = std::cbrt(2.2e-16);
  for (int i = 0; i + 1 < grid; ++i) {
    const double a = lo + margin + (hi - lo - 2 * margin) * i / (grid - 1.0);
    const double b = lo + margin + (hi - lo - 2 * margin) * (i + 1) / (grid - 1.0);
    const double mid = 0.5 * (a + b);
    if (div.f_conj(mid) > 0.5 * (div.f_conj(a) + div.f_conj(b)) + 1e-12) {
      throw Error("divergence '" + div.id + "': f* fails midpoint convexity");
    }
    const double fd = (div.f_conj(mid + h) - div.f_conj(mid - h)) / (2.0 * h);
    const double an = div.f_conj_deriv(mid);
    if (std::abs(fd - an) > 1e-8 * std::max(1.0, std::abs(an))) {
      throw Error("divergence '" + div.id +
                  "': f_conj_deriv disagrees with finite differences of f_conj");
    }
    if (div.f_conj_fused) {
      double v, d1, d2;
      div.f_conj_fused(mid, v, d1, d2);
      if (std::abs(v - div.f_conj(mid)) > 1e-12 * std::max(1.0, std::abs(v)) ||
          std::abs(d1 - an) > 1e-12 * std::max(1.0, std::abs(an))) {
        throw Error("divergence '" + div.id +
                    "': f_conj_fused disagrees with f_conj / f_conj_deriv");
      }
    }
  }
}

}  // namespace momest
