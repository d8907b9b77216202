#pragma once

// Exact time-domain density p_n(t) from the Pollaczek double integral: an
// inner v-integral over (0,pi) with complex powers tracked by continuous
// phase unwrapping, and coefficient extraction over a circle |z| = r <
// sqrt(rho) by the (spectrally accurate) trapezoid rule.

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "psq/core.hpp"
#include "psq/errors.hpp"
#include "psq/oracles.hpp"
#include "psq/specfun.hpp"

namespace psq::exact {

struct PollaczekConfig {
  double contour_radius_fraction = 0.5;  // r = fraction * sqrt(rho)
  int phi_nodes = 0;                     // 0 = auto max(64, 8(n+1))
  double v_quadrature_tol = 1e-9;        // refinement stabilization target
  double coefficient_tol = 1e-8;         // hard ConvergenceError threshold
  int max_v_level = 4;
  int max_phi_doublings = 4;
  double v_min = 1e-6;

  void validate(int n) const {
    if (!(contour_radius_fraction > 0.0 && contour_radius_fraction < 1.0))
      throw DomainError("PollaczekConfig: radius fraction must be in (0,1)");
    if (phi_nodes != 0 && phi_nodes < 8 * (n + 1))
      throw DomainError("PollaczekConfig: phi_nodes must be >= 8(n+1)");
  }
};

class PollaczekEvaluator {
 public:
  explicit PollaczekEvaluator(double rho, PollaczekConfig cfg = {})
      : rho_(rho), cfg_(cfg) {
    if (!std::isfinite(rho) || rho <= 0.0 || rho > 1.0)
      throw DomainError("PollaczekEvaluator: rho must be in (0,1]");
    sr_ = std::sqrt(rho);
    radius_ = cfg_.contour_radius_fraction * sr_;
    if (!(radius_ > 0.0 && radius_ < sr_))
      throw DomainError("PollaczekEvaluator: contour must stay inside sqrt(rho)");
  }

  double rho() const { return rho_; }
  double radius() const { return radius_; }
  bool clamped_negative() const { return clamped_; }

  // Inner integral over v for a fixed z, |z| < sqrt(rho); refined until two
  // successive v-grid levels agree.
  std::complex<double> inner(std::complex<double> z, double t) {
    if (!(std::abs(z) < sr_))
      throw DomainError("pollaczek_inner: requires |z| < sqrt(rho)");
    if (t < 0.0) throw DomainError("pollaczek_inner: requires t >= 0");
    std::complex<double> prev = row_integral(make_row(z, 0), 0, t);
    for (int lv = 1; lv <= cfg_.max_v_level; ++lv) {
      std::complex<double> cur = row_integral(make_row(z, lv), lv, t);
      if (std::abs(cur - prev) <=
          cfg_.v_quadrature_tol * std::max(std::abs(cur), 1e-300))
        return cur;
      prev = cur;
    }
    throw ConvergenceError("pollaczek_inner: v-quadrature did not stabilize");
  }

  // p_n(t) with joint v/phi refinement; negative excursions within tolerance
  // are clamped to zero.
  double density(int n, double t) {
    if (n < 0) throw DomainError("density_pollaczek: n must be >= 0");
    if (t < 0.0) throw DomainError("density_pollaczek: t must be >= 0");
    cfg_.validate(n);
    int P = 64;
    while (P < std::max(cfg_.phi_nodes, 8 * (n + 1))) P *= 2;

    int vl = 0;
    double val = extract(n, t, 0, P);
    for (vl = 1; vl <= cfg_.max_v_level; ++vl) {
      const double cur = extract(n, t, vl, P);
      if (std::abs(cur - val) <=
          cfg_.v_quadrature_tol * std::max(std::abs(cur), 1e-300)) {
        val = cur;
        break;
      }
      val = cur;
      if (vl == cfg_.max_v_level)
        throw ConvergenceError("density_pollaczek: v-refinement exhausted");
    }
    double d1 = std::abs(extract(n, t, vl, 2 * P) - val);
    double d2 = std::abs(extract(n, t, vl, 4 * P) - extract(n, t, vl, 2 * P));
    val = extract(n, t, vl, 4 * P);
    if (d1 + d2 > cfg_.coefficient_tol * std::max(std::abs(val), 1e-300) &&
        cfg_.max_phi_doublings >= 3) {
      const double d3 = std::abs(extract(n, t, vl, 8 * P) - val);
      val = extract(n, t, vl, 8 * P);
      if (d2 + d3 > cfg_.coefficient_tol * std::max(std::abs(val), 1e-300))
        throw ConvergenceError(
            "density_pollaczek: coefficient did not stabilize under phi "
            "doubling");
    }
    if (val < 0.0) {
      if (val < -1e-9)
        throw ConvergenceError("density_pollaczek: negative density " +
                               std::to_string(val) + " beyond tolerance");
      clamped_ = true;
      val = 0.0;
    }
    return val;
  }

  DensityCurve curve(int n, const std::vector<double>& t_grid) {
    std::vector<double> vals;
    vals.reserve(t_grid.size());
    for (double t : t_grid) vals.push_back(density(n, t));
    return DensityCurve(n, t_grid, std::move(vals), Method::exact);
  }

 private:
  struct VGrid {
    std::vector<double> v, w, rate;        // nodes, weights, 1+rho-2 sr cos v
    std::vector<std::complex<double>> m0;  // (i/2) cot v - 1/2
    std::vector<std::complex<double>> e;   // log(c1/c2), principal-safe
    std::vector<std::complex<double>> base;  // z-independent exponent parts
  };
  // exponent samples of the z-dependent factor; reused across all t
  struct Row {
    std::vector<std::complex<double>> expo;
    double max_jump = 0.0;
  };

  const VGrid& grid(int level) {
    auto it = grids_.find(level);
    if (it != grids_.end()) return it->second;
    VGrid g;
    const auto& gl = specfun::gauss_legendre(12);
    std::vector<double> edges;
    {
      // geometric grading toward v = 0, uniform on [pi/8, pi]
      std::vector<double> rev;
      double lo = specfun::kPi / 8.0;
      while (lo > cfg_.v_min) {
        rev.push_back(lo);
        lo *= 0.5;
      }
      edges.push_back(cfg_.v_min);
      for (auto r = rev.rbegin(); r != rev.rend(); ++r) edges.push_back(*r);
      const int uni = 14;
      for (int k = 1; k <= uni; ++k)
        edges.push_back(specfun::kPi / 8.0 +
                        k * (specfun::kPi - specfun::kPi / 8.0) / uni);
    }
    const int sub = 1 << level;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double w = (edges[i + 1] - edges[i]) / sub;
      for (int s = 0; s < sub; ++s) {
        const double a = edges[i] + s * w;
        const double half = 0.5 * w, mid = a + half;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
          g.v.push_back(mid + half * gl.nodes[k]);
          g.w.push_back(half * gl.weights[k]);
        }
      }
    }
    const std::complex<double> I(0.0, 1.0);
    g.rate.resize(g.v.size());
    g.m0.resize(g.v.size());
    g.e.resize(g.v.size());
    g.base.resize(g.v.size());
    for (std::size_t i = 0; i < g.v.size(); ++i) {
      const double v = g.v[i];
      const double cot = std::cos(v) / std::sin(v);
      g.rate[i] = 1.0 + rho_ - 2.0 * sr_ * std::cos(v);
      g.m0[i] = 0.5 * I * cot - 0.5;
      const std::complex<double> c1 = 1.0 - sr_ * std::exp(I * v);
      const std::complex<double> c2 = 1.0 - sr_ * std::exp(-I * v);
      // Re(c2) = 1 - sr cos v >= 0, so arg(c1/c2) stays in (-pi, 0] and the
      // principal branch is always the continuous one for this factor.
      g.e[i] = std::log(c1 / c2);
      g.base[i] = -std::log(c2) + std::log(2.0 * sr_ * std::sin(v)) +
                  specfun::log_logistic(specfun::kPi * cot);
    }
    return grids_.emplace(level, std::move(g)).first->second;
  }

  Row make_row(std::complex<double> z, int level) {
    const VGrid& g = grid(level);
    const std::complex<double> I(0.0, 1.0);
    Row row;
    row.expo.resize(g.v.size());
    double prev_im = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < g.v.size(); ++i) {
      const double v = g.v[i];
      const std::complex<double> b1 = sr_ * std::exp(-I * v) - z;
      const std::complex<double> b2 = sr_ * std::exp(I * v) - z;
      std::complex<double> d = std::log(b1 / b2);
      if (have_prev) {
        const double k =
            std::round((prev_im - d.imag()) / (2.0 * specfun::kPi));
        d += std::complex<double>(0.0, 2.0 * specfun::kPi * k);
        row.max_jump = std::max(row.max_jump, std::abs(d.imag() - prev_im));
      }
      prev_im = d.imag();
      have_prev = true;
      row.expo[i] = g.m0[i] * (d + g.e[i]) - std::log(b2) + g.base[i];
    }
    if (row.max_jump > 0.9 * specfun::kPi)
      throw BranchError(
          "pollaczek: ambiguous phase jump between adjacent v-nodes "
          "(max |d arg| = " +
          std::to_string(row.max_jump) + ")");
    return row;
  }

  std::complex<double> row_integral(const Row& row, int level, double t) {
    const VGrid& g = grid(level);
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < g.v.size(); ++i)
      acc += g.w[i] * std::exp(row.expo[i] - g.rate[i] * t);
    return acc;
  }

  // trapezoid coefficient: p_n(t) = r^{-n} (1/P) sum_j F(r e^{i phi_j}) e^{-i n phi_j};
  // conjugate symmetry halves the row count.
  double extract(int n, double t, int level, int P) {
    auto& rows = rows_[level];
    const std::complex<double> I(0.0, 1.0);
    double acc = 0.0;
    for (int j = 0; j <= P / 2; ++j) {
      const double phi = 2.0 * specfun::kPi * j / P;
      auto it = rows.find(phi);
      if (it == rows.end())
        it = rows.emplace(phi, make_row(radius_ * std::exp(I * phi), level))
                 .first;
      const std::complex<double> F = row_integral(it->second, level, t);
      const std::complex<double> term = F * std::exp(-I * (n * phi));
      if (j == 0 || j == P / 2)
        acc += term.real();
      else
        acc += 2.0 * term.real();
    }
    return acc / P * std::pow(radius_, -n);
  }

  double rho_, sr_, radius_;
  PollaczekConfig cfg_;
  bool clamped_ = false;
  std::map<int, VGrid> grids_;
  std::map<int, std::map<double, Row>> rows_;
};

// One-shot wrappers around the evaluator.

inline std::complex<double> pollaczek_inner(const QueueParams& p,
                                            std::complex<double> z, double t,
                                            PollaczekConfig cfg = {}) {
  PollaczekEvaluator ev(p.rho(), cfg);
  return ev.inner(z, t);
}

inline double density_pollaczek(const QueueParams& p, int n, double t,
                                PollaczekConfig cfg = {}) {
  PollaczekEvaluator ev(p.rho(), cfg);
  return ev.density(n, t);
}

inline DensityCurve density_curve(const QueueParams& p, int n,
                                  const std::vector<double>& t_grid,
                                  PollaczekConfig cfg = {}) {
  PollaczekEvaluator ev(p.rho(), cfg);
  return ev.curve(n, t_grid);
}

// Unconditional density p(t) = sum (1-rho) rho^n p_n(t) via one ODE sweep;
// the geometric truncation is certified by comparing two cutoffs.
inline double unconditional_density(const QueueParams& p, double t,
                                    double tol = 1e-8) {
  p.require_stationary("unconditional_density");
  if (t < 0.0) throw DomainError("unconditional_density: t must be >= 0");
  const double rho = p.rho();
  const int nstar = static_cast<int>(
      std::ceil(std::log(0.5 * tol * (1.0 - rho)) / std::log(rho)));
  const int n_max = nstar + 20;
  oracle::OdeConfig cfg;
  cfg.certify = false;
  cfg.tolerance = tol;
  auto curves = oracle::ode_density(p, n_max, {t}, cfg);
  double sum = 0.0, sum_star = 0.0, w = 1.0 - rho;
  for (int n = 0; n <= n_max; ++n) {
    sum += w * curves[n].values[0];
    if (n == nstar) sum_star = sum;
    w *= rho;
  }
  if (std::abs(sum - sum_star) > tol)
    throw ConvergenceError("unconditional_density: geometric tail not certified");
  return sum;
}

}  // namespace psq::exact
