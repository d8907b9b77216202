#pragma once

// Heavy-traffic (epsilon = 1 - rho -> 0+) asymptotics: the four space-time
// scalings, their implicit equations, matching formulas, conditional limit
// laws, the unconditional-density recovery on both time scales, and ray
// tracing in the (eta, sigma) plane.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "psq/asymptotics.hpp"
#include "psq/core.hpp"
#include "psq/errors.hpp"
#include "psq/exact.hpp"
#include "psq/roots.hpp"
#include "psq/specfun.hpp"

namespace psq::ht {

struct HtScaling {
  double epsilon = 0.0;
  double xi = 0.0;     // eps n
  double tau = 0.0;    // eps t
  double eta = 0.0;    // eps^2 n
  double sigma = 0.0;  // eps^3 t

  static HtScaling from(double epsilon, double n, double t) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw DomainError("HtScaling: epsilon must be in (0,1)");
    if (n < 0.0 || t < 0.0) throw DomainError("HtScaling: n, t >= 0");
    HtScaling s;
    s.epsilon = epsilon;
    s.xi = epsilon * n;
    s.tau = epsilon * t;
    s.eta = epsilon * epsilon * n;
    s.sigma = epsilon * epsilon * epsilon * t;
    return s;
  }
};

// case 1 (n = O(1), t = O(1)): the Pollaczek kernel with rho = 1
inline double ht_case1_density(int n, double t,
                               exact::PollaczekConfig cfg = {}) {
  exact::PollaczekEvaluator ev(1.0, cfg);
  return ev.density(n, t);
}

// u(sigma) from 2 u^3 sigma = pi - arctan(2u) + 2u/(1+4u^2); the right side
// is the real form of pi - (i/2) log((1-2iu)/(1+2iu)) + 2u/(1+4u^2), and the
// complex-form residual is checked at the root rather than assumed.
inline RootResult solve_u(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("solve_u: sigma > 0 required");
  auto g = [&](double u) {
    return 2.0 * u * u * u * sigma -
           (specfun::kPi - std::atan(2.0 * u) + 2.0 * u / (1.0 + 4.0 * u * u));
  };
  double hi = 1.0;
  while (g(hi) < 0.0) hi *= 2.0;
  RootResult r = roots::solve_bracketed(g, 1e-12, hi, 1e-12);
  const std::complex<double> I(0.0, 1.0);
  const double u = r.value;
  const std::complex<double> rhs =
      specfun::kPi -
      0.5 * I * std::log((1.0 - 2.0 * I * u) / (1.0 + 2.0 * I * u)) +
      2.0 * u / (1.0 + 4.0 * u * u);
  const double complex_resid = std::abs(2.0 * u * u * u * sigma - rhs);
  if (complex_resid > 1e-10)
    throw ConvergenceError("solve_u: complex-form identity violated");
  return r;
}

// case 2 (n = O(1), t = sigma/eps^3); log form. The radical carries
// (1+4u^2)^2, consistent with the case-4(c) block and the 1-2 matching
// formula (see ledger).
inline double ht_case2_log_density(double epsilon, int n, double sigma) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw DomainError("ht_case2_density: epsilon in (0,1)");
  if (n < 0) throw DomainError("ht_case2_density: n >= 0");
  const double u = solve_u(sigma).value;
  const double u2 = u * u;
  const double q = 1.0 + 4.0 * u2;
  return std::log(4.0 * std::sqrt(specfun::kPi)) + 1.5 * std::log(epsilon) +
         std::log(u * std::sqrt(q) / std::sqrt(8.0 + 3.0 * sigma * q * q)) -
         (0.125 - 0.5 * u2) * sigma - (3.0 + 4.0 * u2) / (2.0 * q) -
         (1.0 / epsilon) * ((0.25 + 3.0 * u2) * sigma - 2.0 / q) +
         std::log(asym::contour_series_constant(n));
}

inline double ht_case2_density(double epsilon, int n, double sigma) {
  return std::exp(ht_case2_log_density(epsilon, n, sigma));
}

// case 3 (n = xi/eps, t = tau/eps): two-term expansion
inline double ht_case3_density(double epsilon, double xi, double tau) {
  if (!(xi > 0.0)) throw DomainError("ht_case3_density: xi > 0 required");
  if (tau < 0.0) throw DomainError("ht_case3_density: tau >= 0");
  const double e = std::exp(-tau / xi);
  const double lead = epsilon / xi * e;
  const double x2 = xi * xi, x3 = x2 * xi, x4 = x3 * xi, x5 = x4 * xi;
  const double corr = epsilon * epsilon *
                      ((tau - 1.0) / x2 + (4.0 * tau - tau * tau) / (2.0 * x3) -
                       1.5 * tau * tau / x4 + tau * tau * tau / (3.0 * x5)) *
                      e;
  return lead + corr;
}

// ---------------------------------------------------------------------------
// case 4 region geometry (Figure 2)

inline double curve_sigma1(double eta) {
  return std::pow(eta, 1.5) / 3.0 - 8.0 / 3.0;
}

// locus where Btilde = Ctilde = 1/eta, derived from the implicit equations
// (both printed variants disagree with them; see ledger)
inline double curve_sigma2(double eta) {
  return 0.5 * std::pow(eta, 1.5) *
         (0.5 * specfun::kPi + 2.0 * std::sqrt(eta) / (4.0 + eta) -
          std::asin(std::sqrt(4.0 / (4.0 + eta))));
}

inline RegimeLabel ht_region_classify(double eta, double sigma) {
  if (!(eta > 0.0 && sigma > 0.0))
    throw DomainError("ht_region_classify: eta, sigma > 0");
  const double c2 = curve_sigma2(eta);
  if (eta > 4.0) {
    const double c1 = curve_sigma1(eta);
    if (sigma < c1)
      return RegimeLabel(Theorem::heavy_traffic, RegimeCase::c4a, c1 - sigma);
    if (sigma <= c2)
      return RegimeLabel(Theorem::heavy_traffic, RegimeCase::c4b,
                         std::min(sigma - c1, c2 - sigma));
    return RegimeLabel(Theorem::heavy_traffic, RegimeCase::c4c, sigma - c2);
  }
  if (sigma <= c2)
    return RegimeLabel(Theorem::heavy_traffic, RegimeCase::c4b, c2 - sigma);
  return RegimeLabel(Theorem::heavy_traffic, RegimeCase::c4c, sigma - c2);
}

namespace detail {

// left sides divided by X^{3/2} are analytic through X = 0; series below
// X = 1e-3 avoids the cancellation of the four near-equal terms
inline double ht_reduced_A(double At, double eta) {
  if (At < 1e-3) {
    const double c0 = (2.0 / 3.0) * std::pow(eta, 1.5) - 16.0 / 3.0;
    const double c1 = -(128.0 + std::pow(eta, 2.5)) / 5.0;
    return c0 + c1 * At;
  }
  const double sA = std::sqrt(At);
  return (-2.0 * sA / (1.0 - 4.0 * At) - std::asinh(std::sqrt(At * eta)) +
          std::asinh(std::sqrt(4.0 * At / (1.0 - 4.0 * At))) +
          std::sqrt(At * eta * (1.0 + At * eta))) /
         (At * sA);
}

inline double ht_reduced_B(double Bt, double eta) {
  if (Bt < 1e-3) {
    const double c0 = (2.0 / 3.0) * std::pow(eta, 1.5) - 16.0 / 3.0;
    const double c1 = (128.0 + std::pow(eta, 2.5)) / 5.0;
    return c0 + c1 * Bt;
  }
  const double sB = std::sqrt(Bt);
  return (2.0 * sB / (1.0 + 4.0 * Bt) + std::asin(std::sqrt(Bt * eta)) -
          std::asin(std::sqrt(4.0 * Bt / (1.0 + 4.0 * Bt))) -
          std::sqrt(Bt * eta * (1.0 - Bt * eta))) /
         (Bt * sB);
}

}  // namespace detail

inline RootResult solve_Atilde(double eta, double sigma) {
  if (!(eta > 4.0 && sigma > 0.0 && sigma < curve_sigma1(eta)))
    throw RegionError("solve_Atilde: (eta, sigma) not in region 4(a)");
  // reduced-form residual; see solve_A
  auto g = [&](double At) { return detail::ht_reduced_A(At, eta) - 2.0 * sigma; };
  return roots::solve_bracketed(g, 1e-13, 0.25 - 1e-13, 5e-11);
}

inline RootResult solve_Btilde(double eta, double sigma) {
  if (!(eta > 0.0 && sigma > 0.0))
    throw RegionError("solve_Btilde: eta, sigma > 0");
  if (eta > 4.0 && sigma < curve_sigma1(eta))
    throw RegionError("solve_Btilde: (eta, sigma) below the dashed curve");
  if (sigma > curve_sigma2(eta))
    throw RegionError("solve_Btilde: (eta, sigma) above the dotted curve");
  auto g = [&](double Bt) { return detail::ht_reduced_B(Bt, eta) - 2.0 * sigma; };
  return roots::solve_bracketed(g, 1e-13, 1.0 / eta - 1e-15, 5e-11);
}

inline RootResult solve_Ctilde(double eta, double sigma) {
  if (!(eta > 0.0 && sigma > curve_sigma2(eta)))
    throw RegionError("solve_Ctilde: (eta, sigma) not beyond the dotted curve");
  auto q = [&](double Ct) {
    return 2.0 * Ct * std::sqrt(Ct) * sigma -
           (specfun::kPi + 2.0 * std::sqrt(Ct) / (1.0 + 4.0 * Ct) -
            std::asin(std::sqrt(Ct * eta)) -
            std::asin(std::sqrt(4.0 * Ct / (1.0 + 4.0 * Ct))) +
            std::sqrt(Ct * eta * (1.0 - Ct * eta)));
  };
  return roots::solve_bracketed(q, 1e-15, 1.0 / eta, 5e-11);
}

struct HtBranch {
  RegimeCase region = RegimeCase::c4a;
  double parameter = 0.0;
  double lambda = 0.0;  // Lambda-tilde(eta, sigma)
  double phi = 0.0;     // Phi-tilde(eta, sigma)
};

inline HtBranch ht_case4_branch(double eta, double sigma) {
  if (!(eta > 0.0 && sigma > 0.0))
    throw DomainError("ht_case4_density: eta, sigma > 0");
  // evaluation exactly on a transition curve is nudged off it; the branch
  // functions share the limit there (tested by two-sided extrapolation)
  const double c1 = eta > 4.0 ? curve_sigma1(eta) : -1.0;
  if (c1 > 0.0 && std::abs(sigma - c1) < 1e-12 * c1) sigma = c1 * (1.0 + 1e-9);
  const double c2 = curve_sigma2(eta);
  if (std::abs(sigma - c2) < 1e-12 * c2) sigma = c2 * (1.0 + 1e-9);

  HtBranch out;
  const RegimeLabel lab = ht_region_classify(eta, sigma);
  out.region = lab.regime;
  if (lab.regime == RegimeCase::c4a) {
    const double At = solve_Atilde(eta, sigma).value;
    out.parameter = At;
    const double root = std::sqrt(eta * (1.0 + At * eta));
    const double m = 1.0 - 4.0 * At;
    out.lambda =
        2.0 * std::sqrt(At * eta * m) /
        std::sqrt(m * m * (3.0 * sigma * eta * root - eta * eta * eta) +
                  8.0 * eta * root) *
        std::exp(0.25 * eta - 1.0 / m - (0.5 * At + 0.125) * sigma);
    out.phi = 3.0 * At * sigma - 2.0 * root + 2.0 / m;
  } else if (lab.regime == RegimeCase::c4b) {
    const double Bt = solve_Btilde(eta, sigma).value;
    out.parameter = Bt;
    const double root = std::sqrt(eta * (1.0 - Bt * eta));
    const double m = 1.0 + 4.0 * Bt;
    out.lambda =
        2.0 * std::sqrt(Bt * eta * m) /
        std::sqrt(m * m * (eta * eta * eta - 3.0 * sigma * eta * root) -
                  8.0 * eta * root) *
        std::exp(0.25 * eta - 1.0 / m - (0.125 - 0.5 * Bt) * sigma);
    out.phi = -3.0 * Bt * sigma - 2.0 * root + 2.0 / m;
  } else {
    const double Ct = solve_Ctilde(eta, sigma).value;
    out.parameter = Ct;
    const double root = std::sqrt(eta * (1.0 - Ct * eta));
    const double m = 1.0 + 4.0 * Ct;
    out.lambda =
        2.0 * std::sqrt(Ct * eta * m) /
        std::sqrt(m * m * (3.0 * sigma * eta * root + eta * eta * eta) +
                  8.0 * eta * root) *
        std::exp(0.25 * eta - 1.0 / m - (0.125 - 0.5 * Ct) * sigma);
    out.phi = -3.0 * Ct * sigma + 2.0 * root + 2.0 / m;
  }
  return out;
}

inline double ht_case4_log_density(double epsilon, double eta, double sigma) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw DomainError("ht_case4_density: epsilon in (0,1)");
  const HtBranch b = ht_case4_branch(eta, sigma);
  return 2.0 * std::log(epsilon) + std::log(b.lambda) +
         (b.phi + 0.5 * eta - 0.25 * sigma) / epsilon;
}

inline double ht_case4_density(double epsilon, double eta, double sigma) {
  return std::exp(ht_case4_log_density(epsilon, eta, sigma));
}

// matching 1-2 (n = O(1), 1 << t << eps^{-2})
inline double ht_matching12_log_density(int n, double t) {
  if (!(t > 0.0)) throw DomainError("ht_matching12: t > 0");
  return std::log(2.0 * std::sqrt(specfun::kPi) / std::sqrt(3.0 * t)) -
         std::pow(2.0, -4.0 / 3.0) * 3.0 * std::pow(specfun::kPi, 2.0 / 3.0) *
             std::cbrt(t) -
         0.5 + std::log(asym::contour_series_constant(n));
}

// matching 2-4c (1 << n << eps^{-2}, t = O(eps^{-3})); radical as in case 2
inline double ht_matching24_log_density(double epsilon, double eta,
                                        double sigma) {
  if (!(epsilon > 0.0 && eta > 0.0 && sigma > 0.0))
    throw DomainError("ht_matching24: positive arguments required");
  const double u = solve_u(sigma).value;
  const double u2 = u * u;
  const double q = 1.0 + 4.0 * u2;
  return std::log(2.0) + 2.0 * std::log(epsilon) - 0.25 * std::log(eta) +
         std::log(u * std::sqrt(q) / std::sqrt(8.0 + 3.0 * sigma * q * q)) -
         (0.125 - 0.5 * u2) * sigma - (3.0 + 4.0 * u2) / (2.0 * q) + 0.5 -
         (1.0 / epsilon) *
             ((0.25 + 3.0 * u2) * sigma - 2.0 / q - 2.0 * std::sqrt(eta));
}

// ---------------------------------------------------------------------------
// conditional limit laws p(n|t)

// t = tau/eps scale, xi = eps n
inline double conditional_law_xi(double epsilon, double n, double t) {
  const HtScaling s = HtScaling::from(epsilon, n, t);
  if (!(s.xi > 0.0 && s.tau > 0.0))
    throw DomainError("conditional_law_xi: xi, tau > 0");
  return epsilon / (2.0 * s.xi * specfun::bessel_k(0, 2.0 * std::sqrt(s.tau))) *
         std::exp(-s.xi - s.tau / s.xi);
}

// Gaussian simplification for tau -> infinity, xi = sqrt(tau) + O(tau^{1/4})
inline double conditional_law_xi_gauss(double epsilon, double n, double t) {
  const HtScaling s = HtScaling::from(epsilon, n, t);
  if (!(s.tau > 0.0)) throw DomainError("conditional_law_xi_gauss: tau > 0");
  const double st = std::sqrt(s.tau);
  return epsilon / (std::sqrt(specfun::kPi) * std::pow(s.tau, 0.25)) *
         std::exp(-(s.xi - st) * (s.xi - st) / st);
}

// Chat(sigma): 2 Chat^{3/2} sigma = pi + 4 sqrt(Chat)/(1+4Chat)
//                                  - 2 arcsin(sqrt(4Chat/(1+4Chat)))
inline RootResult solve_Chat(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("solve_Chat: sigma > 0");
  auto g = [&](double C) {
    return 2.0 * C * std::sqrt(C) * sigma -
           (specfun::kPi + 4.0 * std::sqrt(C) / (1.0 + 4.0 * C) -
            2.0 * std::asin(std::sqrt(4.0 * C / (1.0 + 4.0 * C))));
  };
  double hi = 1.0;
  while (g(hi) < 0.0) hi *= 2.0;
  return roots::solve_bracketed(g, 1e-12, hi, 1e-12);
}

inline double q_factor(double sigma) {
  const double C = solve_Chat(sigma).value;
  const double m = 1.0 + 4.0 * C;
  return m * m * (3.0 * sigma * m * m + 16.0) /
         (16.0 * (3.0 * sigma * m * m + 16.0 * (1.0 + 2.0 * C)));
}

// t = sigma/eps^3 scale, Gaussian in eta about 4/(4 Chat + 1)
inline double conditional_law_eta(double epsilon, double n, double t) {
  const HtScaling s = HtScaling::from(epsilon, n, t);
  if (!(s.sigma > 0.0)) throw DomainError("conditional_law_eta: sigma > 0");
  const double C = solve_Chat(s.sigma).value;
  const double Q = q_factor(s.sigma);
  const double center = 4.0 / (4.0 * C + 1.0);
  return std::pow(epsilon, 1.5) * std::sqrt(Q / (2.0 * specfun::kPi)) *
         std::exp(-Q / (2.0 * epsilon) * (s.eta - center) * (s.eta - center));
}

// ---------------------------------------------------------------------------
// unconditional density recovery (Morrison)

enum class MorrisonScale { tau_scale, sigma_scale };

inline double morrison_sigma_of_psi(double psi) {
  return 4.0 * (std::sin(psi) + psi) * std::pow(std::tan(0.5 * psi), 3);
}

namespace detail {

// F0 along the saddle path, with sigma = sigma(psi); the sign of the psi tan
// term is the internally consistent one (see ledger)
inline double morrison_f0(double psi) {
  const double s = morrison_sigma_of_psi(psi);
  const double sn = std::sin(0.5 * psi);
  return 2.0 * psi * std::tan(0.5 * psi) + 0.25 * s / (sn * sn);
}

inline double morrison_f1(double psi) {
  const double s = morrison_sigma_of_psi(psi);
  const double sn = std::sin(0.5 * psi);
  return 0.125 * s / (sn * sn) - psi * std::tan(0.5 * psi);
}

}  // namespace detail

inline double morrison_pt(double epsilon, MorrisonScale scale, double t) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw DomainError("morrison_pt: epsilon in (0,1)");
  if (!(t > 0.0)) throw DomainError("morrison_pt: t > 0");
  if (scale == MorrisonScale::tau_scale) {
    const double tau = epsilon * t;
    const double x = 2.0 * std::sqrt(tau);
    const double k0 = specfun::bessel_k(0, x);
    const double k1 = specfun::bessel_k(1, x);
    return 2.0 * epsilon * k0 +
           epsilon * epsilon / 3.0 *
               ((6.0 - tau) * k0 - std::sqrt(tau) * k1);
  }
  const double sigma = epsilon * epsilon * epsilon * t;
  auto g = [&](double psi) { return morrison_sigma_of_psi(psi) - sigma; };
  RootResult r = roots::solve_bracketed(g, 1e-8, specfun::kPi - 1e-8, 1e-9);
  const double psi = r.value;
  const double h = 1e-5;
  const double f0pp = (detail::morrison_f0(psi + h) -
                       2.0 * detail::morrison_f0(psi) +
                       detail::morrison_f0(psi - h)) /
                      (h * h);
  if (!(f0pp > 0.0))
    throw ConvergenceError("morrison_pt: non-convex F0 at the saddle");
  return std::pow(epsilon, 1.5) / std::tan(0.5 * psi) *
         std::sqrt(2.0 * specfun::kPi / f0pp) *
         std::exp(-detail::morrison_f1(psi)) *
         std::exp(-detail::morrison_f0(psi) / epsilon);
}

// ---------------------------------------------------------------------------
// rays in the (eta, sigma) plane: d eta/d sigma = -2q, dq/d sigma = 1/eta^2,
// launched from (eta0, 0) with q = -1/2 (initial data Phi(eta,0) = -eta/2);
// p = q^2 - 1/eta is conserved. The eta0 = 4 ray is sigma = eta^{3/2}/3 - 8/3.

inline asym::RayFan ht_trace_rays(int region_count, int ray_count,
                                  double sigma_max = 12.0,
                                  double eta_max = 16.0) {
  if (ray_count < 1 || region_count < 1 || region_count > 3)
    throw DomainError("ht_trace_rays: bad region/ray count");
  asym::RayFan fan;
  const int n_ret = region_count >= 2 ? (ray_count + 1) / 2 : 0;
  const int n_fwd = ray_count - n_ret;
  std::vector<double> eta0s;
  for (int i = 0; i < n_fwd; ++i)
    eta0s.push_back(4.0 + (eta_max - 4.0) * i / std::max(1, n_fwd));
  for (int i = 0; i < n_ret; ++i)
    eta0s.push_back(4.0 * (i + 1.0) / (n_ret + 1.0));

  // q-parametrized characteristics in w = 1/eta: dw/dq = 2q is reproduced by
  // RK4 to roundoff so the conserved ray momentum cannot drift
  for (double eta0 : eta0s) {
    asym::Polyline line;
    line.id = "ray eta0=" + std::to_string(eta0);
    double w = 1.0 / eta0, q = -0.5, sig = 0.0;
    line.pts.push_back({eta0, sig});
    for (long step = 0; step < 2000000; ++step) {
      const double h = 0.002 * (std::abs(q) + 0.2);
      auto f = [&](double qq, double ww, double& ds, double& dw) {
        ds = 1.0 / (ww * ww);
        dw = 2.0 * qq;
      };
      double k1s, k1w, k2s, k2w, k3s, k3w, k4s, k4w;
      f(q, w, k1s, k1w);
      f(q + 0.5 * h, w + 0.5 * h * k1w, k2s, k2w);
      f(q + 0.5 * h, w + 0.5 * h * k2w, k3s, k3w);
      f(q + h, w + h * k3w, k4s, k4w);
      sig += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
      w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
      q += h;
      if (!std::isfinite(w) || w <= 0.0)
        throw IntegrationError("ht_trace_rays: ray left the numerical window");
      if (step % 4 == 0) line.pts.push_back({1.0 / w, sig});
      if (sig >= sigma_max || w <= 1.0 / eta_max || w >= 1e6) break;
    }
    fan.rays.push_back(std::move(line));
  }

  fan.curve_dashed.id = "sigma=eta^(3/2)/3-8/3";
  fan.curve_dotted.id = "Btilde=1/eta";
  for (int i = 0; i <= 200; ++i) {
    const double eta = 4.0 + (eta_max - 4.0) * i / 200.0;
    fan.curve_dashed.pts.push_back({eta, curve_sigma1(eta)});
  }
  for (int i = 1; i <= 200; ++i) {
    const double eta = eta_max * i / 200.0;
    fan.curve_dotted.pts.push_back({eta, curve_sigma2(eta)});
  }
  return fan;
}

}  // namespace psq::ht
