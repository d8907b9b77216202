#pragma once

// Fixed-rho (rho < 1) large-n/large-t asymptotics: the five regimes, their
// implicit-equation solvers, matching-region formulas, a total regime
// classifier, and numeric ray tracing of the eikonal characteristics that
// organize the case-4 sub-regions.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "psq/core.hpp"
#include "psq/errors.hpp"
#include "psq/roots.hpp"
#include "psq/specfun.hpp"
#include "psq/transform.hpp"

namespace psq::asym {

inline double boundary_a_ab(const QueueParams& p) {
  return std::pow(3.0 * std::sqrt(p.rho()), 2.0 / 3.0);
}
inline double boundary_a_bc(const QueueParams& p) {
  return std::pow(4.0 * std::sqrt(p.rho()) / specfun::kPi, 2.0 / 3.0);
}

// ---------------------------------------------------------------------------
// classification

struct ClassifierConfig {
  double band_width_sigmas = 3.0;   // case-2 band half-width in Delta_2 sigmas
  bool enable_case5 = true;
  double case3_ratio_cutoff = 0.1;  // case 3 iff n/t >= cutoff * (1-rho)
};

inline RegimeLabel regime_classify(const QueueParams& p, int n, double t,
                                   ClassifierConfig cfg = {}) {
  p.require_stationary("regime_classify");
  if (n < 0 || !(t > 0.0))
    throw DomainError("regime_classify: need n >= 0, t > 0");
  const double rho = p.rho();
  const double r = n / t;
  const double w = cfg.band_width_sigmas * std::sqrt((1.0 + rho) / (1.0 - rho));
  const double band = w / std::sqrt(t);
  const double off = r - (1.0 - rho);

  if (cfg.enable_case5 && n <= std::cbrt(t) && off < -band)
    return RegimeLabel(Theorem::rho_fixed, RegimeCase::c5,
                       std::cbrt(t) - n);
  if (std::abs(off) <= band)
    return RegimeLabel(Theorem::rho_fixed, RegimeCase::c2,
                       (band - std::abs(off)) * std::sqrt(t) / w);
  if (off > 0.0)
    return RegimeLabel(Theorem::rho_fixed, RegimeCase::c1,
                       (off - band) * std::sqrt(t) / w);
  // below the band: case 3 for order-one n/t, case 4 on the t^{2/3} scale
  const double a = n * std::pow(t, -2.0 / 3.0);
  if (r >= cfg.case3_ratio_cutoff * (1.0 - rho))
    return RegimeLabel(Theorem::rho_fixed, RegimeCase::c3,
                       (-off - band) * std::sqrt(t) / w);
  const double ab = boundary_a_ab(p), bc = boundary_a_bc(p);
  if (a >= ab) return RegimeLabel(Theorem::rho_fixed, RegimeCase::c4a, a - ab);
  if (a > bc)
    return RegimeLabel(Theorem::rho_fixed, RegimeCase::c4b,
                       std::min(ab - a, a - bc));
  return RegimeLabel(Theorem::rho_fixed, RegimeCase::c4c, bc - a);
}

// ---------------------------------------------------------------------------
// case 1: n/t > 1-rho, two-term expansion in 1/n

inline double case1_density(const QueueParams& p, double n, double t) {
  p.require_stationary("case1_density");
  const double rho = p.rho();
  const double d1 = 1.0 - (1.0 - rho) * t / n;
  if (!(d1 > 0.0)) throw DomainError("case1_density: Delta_1 must be > 0");
  const double lead = std::pow(d1, rho / (1.0 - rho)) / n;
  const double om = 1.0 - rho;
  const double corr =
      std::pow(d1, (3.0 * rho - 2.0) / om) / (2.0 * om * om * om * n * n) *
      (rho * (2.0 * rho * rho + rho - 1.0) +
       4.0 * rho * rho * d1 * std::log(d1) + 6.0 * rho * om * d1 -
       (rho * rho - rho + 2.0) * d1 * d1);
  return lead + corr;
}

// ---------------------------------------------------------------------------
// case 2: diffusive band n/t = 1-rho + O(t^{-1/2})

inline double case2_density(const QueueParams& p, double n, double t,
                            double delta2_bound = 10.0) {
  p.require_stationary("case2_density");
  const double rho = p.rho();
  const double d2 = std::sqrt(n) * (1.0 - (1.0 - rho) * t / n);
  if (std::abs(d2) > delta2_bound)
    throw DomainError("case2_density: |Delta_2| = " + std::to_string(d2) +
                      " outside band bound");
  const double pw = rho / (1.0 - rho);
  const double beta = (1.0 - rho) / (2.0 * (1.0 + rho));
  const double sig = 1.0 / std::sqrt(2.0 * beta);
  const double hi = std::max(d2, 0.0) + 12.0 * sig;
  auto f = [&](double y) {
    return std::pow(y, pw) * std::exp(-beta * (y - d2) * (y - d2));
  };
  // graded panels near the y^pw kink at 0, uniform across the Gaussian bulk
  std::vector<double> edges = specfun::graded_edges(std::min(1.0, hi), 0.0, 0.5, 1e-10);
  std::vector<double> rev(edges.rbegin(), edges.rend());
  for (double e = std::min(1.0, hi); e < hi - 1e-14; )
    rev.push_back(e = std::min(hi, e + 0.5 * sig));
  const double integral = specfun::panel_integrate(f, rev, 16);
  return 1.0 / std::sqrt(2.0 * specfun::kPi) *
         std::sqrt((1.0 - rho) / (1.0 + rho)) *
         std::pow(n, -(2.0 - rho) / (2.0 * (1.0 - rho))) * integral;
}

// ---------------------------------------------------------------------------
// case 3: 0 < n/t < 1-rho (saddle point); exponentially small, so the log
// form is primary.

inline double theta_star(const QueueParams& p, double ratio) {
  return std::sqrt(ratio * ratio + 4.0 * p.rho()) - 1.0 - p.rho();
}

inline double case3_log_density(const QueueParams& p, double n, double t) {
  p.require_stationary("case3_density");
  const double rho = p.rho();
  const double r = n / t;
  if (!(r > 0.0 && r < 1.0 - rho))
    throw DomainError("case3_density: requires 0 < n/t < 1-rho");
  const double th = theta_star(p, r);
  const auto sp = transform::spectral_point(p, th);
  const double s = 1.0 + rho + th;
  const double disc = s * s - 4.0 * rho;  // = r^2 at the saddle
  const double logK = -0.5 * std::log(2.0 * specfun::kPi) +
                      sp.alpha * std::log(sp.alpha) +
                      specfun::log_gamma(sp.alpha) + std::log(sp.z_minus) +
                      (sp.alpha - 1.0) * std::log(1.0 - rho * sp.z_minus) +
                      0.75 * std::log(disc) -
                      sp.alpha * std::log(1.0 - rho * sp.z_plus) -
                      0.5 * std::log(s);
  const double expo = t * th + n * std::log(sp.z_minus);
  return (-1.0 - 0.5 * std::sqrt(1.0 + 4.0 * rho * t * t / (n * n))) *
             std::log(n) +
         logK + expo;
}

inline double case3_density(const QueueParams& p, double n, double t) {
  return std::exp(case3_log_density(p, n, t));
}

// ---------------------------------------------------------------------------
// case 4 implicit equations. The left sides divided by X^{3/2} are analytic
// through X = 0; a short series keeps small roots cancellation-free.

namespace detail {

inline double h_reduced_A(double A) {
  if (A < 1e-3)
    return 2.0 / 3.0 - A / 5.0 + 3.0 * A * A / 28.0;
  return (std::sqrt(A * (1.0 + A)) - std::asinh(std::sqrt(A))) /
         (A * std::sqrt(A));
}
inline double h_reduced_B(double B) {
  if (B < 1e-3)
    return 2.0 / 3.0 + B / 5.0 + 3.0 * B * B / 28.0;
  return (std::asin(std::sqrt(B)) - std::sqrt(B * (1.0 - B))) /
         (B * std::sqrt(B));
}

}  // namespace detail

// A(a) for a >= (3 sqrt rho)^{2/3}: 2 sqrt(rho) A^{3/2} a^{-3/2}
//   = sqrt(A(1+A)) - arcsinh(sqrt A).
inline RootResult solve_A(const QueueParams& p, double a) {
  const double ab = boundary_a_ab(p);
  if (!(a >= ab * (1.0 - 1e-14)))
    throw DomainError("solve_A: requires a >= (3 sqrt rho)^{2/3}");
  const double tgt = 2.0 * std::sqrt(p.rho()) * std::pow(a, -1.5);
  if (std::abs(a - ab) <= 1e-14 * ab) return {0.0, 0.0, 0, {0.0, 0.0}};
  const double hi = a * a * a / (2.0 * p.rho()) + 1.0;
  // residual reported on the reduced (X^{-3/2}-scaled) form, whose natural
  // scale is O(1); the raw equation scales like A^{3/2} at large a
  auto g = [&](double A) { return detail::h_reduced_A(A) - tgt; };
  return roots::solve_bracketed(g, 1e-12, hi, 5e-11);
}

// B(a) on (4 sqrt rho / pi)^{2/3} < a < (3 sqrt rho)^{2/3}.
inline RootResult solve_B(const QueueParams& p, double a) {
  if (!(a > boundary_a_bc(p) && a < boundary_a_ab(p)))
    throw DomainError("solve_B: a outside the case-4(b) range");
  const double tgt = 2.0 * std::sqrt(p.rho()) * std::pow(a, -1.5);
  auto g = [&](double B) { return tgt - detail::h_reduced_B(B); };
  return roots::solve_bracketed(g, 1e-12, 1.0 - 1e-14, 5e-11);
}

// C(a) on 0 < a <= (4 sqrt rho / pi)^{2/3}: 2 sqrt(rho) C^{3/2} a^{-3/2}
//   = sqrt(C(1-C)) + pi - arcsin(sqrt C).
inline RootResult solve_C(const QueueParams& p, double a) {
  const double bc = boundary_a_bc(p);
  if (!(a > 0.0 && a <= bc * (1.0 + 1e-14)))
    throw DomainError("solve_C: a outside the case-4(c) range");
  const double c0 = 2.0 * std::sqrt(p.rho()) * std::pow(a, -1.5);
  auto q = [&](double C) {
    return c0 * C * std::sqrt(C) - std::sqrt(C * (1.0 - C)) - specfun::kPi +
           std::asin(std::sqrt(C));
  };
  // C = 1 is the root exactly on the 4(b)/4(c) boundary
  if (std::abs(a - bc) <= 1e-13 * bc)
    return {1.0, std::abs(q(1.0)), 0, {1e-15, 1.0}};
  return roots::solve_bracketed(q, 1e-15, 1.0, 1e-12);
}

enum class Case4Label { a_branch, b_branch, c_branch };

struct Case4Branch {
  Case4Label label = Case4Label::a_branch;
  double parameter = 0.0;  // A >= 0, or B in (0,1), or C in (0,1)
  double lambda = 0.0;     // Lambda(n,t) prefactor
  double phi = 0.0;        // Phi(n,t) exponent term
};

// Lambda and Phi of the t^{2/3} scale; branch chosen by a = n t^{-2/3}.
inline Case4Branch case4_branch(const QueueParams& p, double n, double t) {
  p.require_stationary("case4_density");
  const double rho = p.rho();
  const double sr = std::sqrt(rho);
  const double a = n * std::pow(t, -2.0 / 3.0);
  if (!(a > 0.0) || !(t > 0.0))
    throw DomainError("case4_density: need n, t > 0");
  const double ab = boundary_a_ab(p), bc = boundary_a_bc(p);
  const double E = std::exp((1.0 + sr) / (2.0 * (1.0 - sr)));
  const double t13 = std::cbrt(t);
  Case4Branch out;
  if (std::abs(a - ab) <= 1e-12 * ab) {
    // shared limit of the a- and b-branches on the dashed curve
    out.label = Case4Label::a_branch;
    out.parameter = 0.0;
    out.lambda = std::sqrt(5.0 / (3.0 * sr)) * E /
                 ((1.0 - sr) * std::pow(a, 0.75) * t);
    out.phi = -2.0 * std::sqrt(a) * t13;
    return out;
  }
  if (a > ab) {
    const double A = solve_A(p, a).value;
    out.label = Case4Label::a_branch;
    out.parameter = A;
    out.lambda = std::sqrt(A) * E /
                 ((1.0 - sr) * std::pow(a, 0.75) *
                  std::sqrt(3.0 * std::sqrt(rho * (1.0 + A)) - std::pow(a, 1.5)) * t);
    out.phi = (3.0 * sr * A / a - 2.0 * std::sqrt(a * (1.0 + A))) * t13;
  } else if (a > bc) {
    const double B = solve_B(p, a).value;
    out.label = Case4Label::b_branch;
    out.parameter = B;
    out.lambda = std::sqrt(B) * E /
                 ((1.0 - sr) * std::pow(a, 0.75) *
                  std::sqrt(std::pow(a, 1.5) - 3.0 * std::sqrt(rho * (1.0 - B))) * t);
    out.phi = (-3.0 * sr * B / a - 2.0 * std::sqrt(a * (1.0 - B))) * t13;
  } else {
    const double C = solve_C(p, a).value;
    out.label = Case4Label::c_branch;
    out.parameter = C;
    out.lambda = std::sqrt(C) * E /
                 ((1.0 - sr) * std::pow(a, 0.75) *
                  std::sqrt(3.0 * std::sqrt(rho * (1.0 - C)) + std::pow(a, 1.5)) * t);
    out.phi = (-3.0 * sr * C / a + 2.0 * std::sqrt(a * (1.0 - C))) * t13;
  }
  return out;
}

inline double case4_log_density(const QueueParams& p, double n, double t) {
  const double sr = std::sqrt(p.rho());
  const Case4Branch b = case4_branch(p, n, t);
  return -0.5 * n * std::log(p.rho()) + std::log(b.lambda) -
         (1.0 - sr) * (1.0 - sr) * t + b.phi;
}

inline double case4_density(const QueueParams& p, double n, double t) {
  return std::exp(case4_log_density(p, n, t));
}

// ---------------------------------------------------------------------------
// case 5: n = O(1), t -> infinity

// sum_{l>=0} (n+l)! / ((l!)^2 n!); reduces to e at n = 0.
inline double contour_series_constant(int n) {
  if (n < 0) throw DomainError("contour_series_constant: n >= 0");
  double sum = 0.0, term = 1.0;
  for (int l = 0; l < 100000; ++l) {
    sum += term;
    term *= (n + l + 1.0) / ((l + 1.0) * (l + 1.0));
    if (term < 1e-16 * sum) return sum + term;
  }
  throw ConvergenceError("contour_series_constant: no convergence");
}

inline double case5_log_density(const QueueParams& p, int n, double t) {
  p.require_stationary("case5_density");
  if (!(t > 0.0)) throw DomainError("case5_density: t > 0");
  const double rho = p.rho();
  const double sr = std::sqrt(rho);
  return std::log(std::pow(2.0, 2.0 / 3.0) / std::sqrt(3.0)) +
         (5.0 / 6.0) * std::log(specfun::kPi) - (5.0 / 12.0) * std::log(rho) -
         std::log(1.0 - sr) - (5.0 / 6.0) * std::log(t) -
         (1.0 - sr) * (1.0 - sr) * t -
         3.0 * std::pow(2.0, -2.0 / 3.0) * std::pow(specfun::kPi, 2.0 / 3.0) *
             std::pow(rho, 1.0 / 6.0) * std::cbrt(t) +
         sr / (1.0 - sr) - 0.5 * n * std::log(rho) +
         std::log(contour_series_constant(n));
}

inline double case5_density(const QueueParams& p, int n, double t) {
  return std::exp(case5_log_density(p, n, t));
}

// ---------------------------------------------------------------------------
// matching regions

enum class MatchingPair { m23, m34, m45 };

// Overlap strips (the spec leaves the concrete bounds to the implementation):
//  2-3:  below the case-2 band but within 0.8(1-rho) of it;
//  3-4a: a >= 1.5 (3 sqrt rho)^{2/3} and n/t <= 0.5 (1-rho);
//  4c-5: n >= 4 and a <= 0.5 (4 sqrt rho/pi)^{2/3}.
inline double matching_log_density(const QueueParams& p, MatchingPair pair,
                                   double n, double t) {
  p.require_stationary("matching_density");
  const double rho = p.rho();
  const double sr = std::sqrt(rho);
  const double r = n / t;
  const double a = n * std::pow(t, -2.0 / 3.0);
  switch (pair) {
    case MatchingPair::m23: {
      const double off = (1.0 - rho) - r;
      const double band =
          3.0 * std::sqrt((1.0 + rho) / (1.0 - rho)) / std::sqrt(t);
      // the strip overlaps the outer part of the case-2 band
      if (!(off > 0.6 * band && off <= 0.8 * (1.0 - rho)))
        throw DomainError("matching_density(2-3): outside overlap strip");
      // n-exponent (3-rho)/(2(1-rho)); see ledger on the printed form
      return 0.5 * std::log(1.0 - rho) -
             0.5 * std::log(2.0 * specfun::kPi) +
             specfun::log_gamma(1.0 / (1.0 - rho)) -
             std::log(off) / (1.0 - rho) +
             (1.0 + rho) / (2.0 * (1.0 - rho)) * std::log(1.0 + rho) -
             (3.0 - rho) / (2.0 * (1.0 - rho)) * std::log(n) -
             t * (r - 1.0 + rho) * (r - 1.0 + rho) / (2.0 * (1.0 + rho));
    }
    case MatchingPair::m34: {
      if (!(a >= 1.5 * boundary_a_ab(p) && r <= 0.5 * (1.0 - rho)))
        throw DomainError("matching_density(3-4a): outside overlap strip");
      return -0.5 * n * std::log(rho) -
             std::log(std::sqrt(2.0 * rho) * (1.0 - sr) * t) +
             (1.0 + sr) / (2.0 * (1.0 - sr)) - (1.0 - sr) * (1.0 - sr) * t -
             n * n / (4.0 * sr * t) +
             sr * t / n *
                 (std::log(rho) - 1.0 + 2.0 * std::log(t) - 3.0 * std::log(n));
    }
    case MatchingPair::m45: {
      if (!(n >= 4.0 && a <= 0.5 * boundary_a_bc(p)))
        throw DomainError("matching_density(4c-5): outside overlap strip");
      return -(5.0 / 12.0) * std::log(rho) - std::log(1.0 - sr) +
             std::log(specfun::kPi / 2.0) / 3.0 - 0.5 * std::log(3.0) -
             0.5 * n * std::log(rho) - (5.0 / 6.0) * std::log(t) -
             0.25 * std::log(n) - (1.0 - sr) * (1.0 - sr) * t -
             3.0 * std::pow(specfun::kPi / 2.0, 2.0 / 3.0) *
                 std::pow(rho, 1.0 / 6.0) * std::cbrt(t) +
             2.0 * std::sqrt(n) + (1.0 + sr) / (2.0 * (1.0 - sr));
    }
  }
  throw DomainError("matching_density: unknown pair");
}

inline double matching_density(const QueueParams& p, MatchingPair pair,
                               double n, double t) {
  return std::exp(matching_log_density(p, pair, n, t));
}

// ---------------------------------------------------------------------------
// ray tracing of (1/sqrt rho) Psi_T = (Psi_Y)^2 - 1/Y, rays from the origin

struct Polyline {
  std::string id;
  std::vector<std::array<double, 2>> pts;  // (T, Y) resp. (eta, sigma)
};

struct RayFan {
  std::vector<Polyline> rays;
  Polyline curve_dashed;  // a = (3 sqrt rho)^{2/3}, the A = 0 ray
  Polyline curve_dotted;  // a = (4 sqrt rho/pi)^{2/3}, locus of ray maxima
};

// Characteristics in (Y,T): dY/dT = -2 sqrt(rho) q, dq/dT = sqrt(rho)/Y^2,
// with p = Psi_T constant along a ray and q = -sqrt(1/Y + p/sqrt rho) at
// launch. Both right sides blow up at the Y = 0 launch, so the system is
// integrated in the q-parametrization dT/dq = Y^2/sqrt(rho), dY/dq = -2qY^2,
// which is smooth through the turning point q = 0.
// region_count 1 emits only region-1 rays (p >= 0); >= 2 adds returning rays.
inline RayFan trace_rays(const QueueParams& p, int region_count, int ray_count,
                         double t_max = 10.0, double y_max = 12.0) {
  p.require_stationary("trace_rays");
  if (ray_count < 1 || region_count < 1 || region_count > 3)
    throw DomainError("trace_rays: bad region/ray count");
  const double sr = std::sqrt(p.rho());
  RayFan fan;

  const int n_ret = region_count >= 2 ? (ray_count + 1) / 2 : 0;
  const int n_fwd = ray_count - n_ret;
  std::vector<double> ps;
  for (int i = 0; i < n_fwd; ++i)
    ps.push_back(i == 0 ? 0.0 : sr * std::pow(2.0, i - 1) / y_max);
  for (int i = 0; i < n_ret; ++i)
    ps.push_back(-sr / (y_max * (i + 1.0) / (n_ret + 1.0)));

  // w = 1/Y obeys dw/dq = 2q, which RK4 reproduces to roundoff, so the
  // conserved momentum cannot drift the way it does in (Y, q) variables
  for (double mom : ps) {
    Polyline line;
    line.id = "ray p=" + std::to_string(mom);
    const double w0 = 1e9;  // launch at Y = 1e-9
    double w = w0, t = 0.0;
    double q = -std::sqrt(w0 + mom / sr);
    line.pts.push_back({t, 1.0 / w});
    for (long step = 0; step < 2000000; ++step) {
      const double h = 0.01 * (std::abs(q) + 0.2);
      auto f = [&](double qq, double ww, double& dt, double& dw) {
        dt = 1.0 / (sr * ww * ww);
        dw = 2.0 * qq;
      };
      double k1t, k1w, k2t, k2w, k3t, k3w, k4t, k4w;
      f(q, w, k1t, k1w);
      f(q + 0.5 * h, w + 0.5 * h * k1w, k2t, k2w);
      f(q + 0.5 * h, w + 0.5 * h * k2w, k3t, k3w);
      f(q + h, w + h * k3w, k4t, k4w);
      t += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
      w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
      q += h;
      if (!std::isfinite(w) || w <= 0.0)
        throw IntegrationError("trace_rays: ray left the numerical window");
      if (step % 4 == 0) line.pts.push_back({t, 1.0 / w});
      if (t >= t_max || w <= 1.0 / y_max || (q > 0.0 && w >= w0)) break;
    }
    fan.rays.push_back(std::move(line));
  }

  const double ca = boundary_a_ab(p), cc = boundary_a_bc(p);
  fan.curve_dashed.id = "a=(3 sqrt rho)^(2/3)";
  fan.curve_dotted.id = "a=(4 sqrt rho/pi)^(2/3)";
  for (int i = 0; i <= 200; ++i) {
    const double t = t_max * i / 200.0;
    fan.curve_dashed.pts.push_back({t, ca * std::pow(t, 2.0 / 3.0)});
    fan.curve_dotted.pts.push_back({t, cc * std::pow(t, 2.0 / 3.0)});
  }
  return fan;
}

}  // namespace psq::asym
