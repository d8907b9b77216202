#pragma once

// Laplace-transform side of the sojourn-time solution on the real-theta
// domain: quadratic-kernel roots z+-, the decaying (G_n) and growing (H_n)
// homogeneous solutions of the three-term recurrence, the discrete-Wronskian
// normalization, the transform phat_n(theta), and the closed-form sum of
// rho^l H_l on its convergence window.

#include <cmath>
#include <string>
#include <vector>

#include "psq/core.hpp"
#include "psq/errors.hpp"
#include "psq/specfun.hpp"

namespace psq::transform {

struct SpectralPoint {
  double theta = 0.0;
  double z_plus = 0.0;
  double z_minus = 0.0;
  double alpha = 0.0;
  double m_factor = 0.0;  // z_- (z_+/z_-)^alpha
};

inline double branch_point(const QueueParams& p) {
  const double sr = std::sqrt(p.rho());
  return -(1.0 - sr) * (1.0 - sr);
}

// Roots of rho z^2 - (1+rho+theta) z + 1 and derived quantities. The
// discriminant is evaluated in product form (theta - theta_c)(theta + (1+sqrt
// rho)^2) to stay accurate near the branch point, and z_- via 2/(s + sqrt D)
// so that rho z+ z- = 1 holds to roundoff.
inline SpectralPoint spectral_point(const QueueParams& p, double theta) {
  const double rho = p.rho();
  const double sr = std::sqrt(rho);
  const double tc = -(1.0 - sr) * (1.0 - sr);
  if (!(theta > tc))
    throw DomainError("spectral_point: theta must exceed the branch point " +
                      std::to_string(tc));
  const double s = 1.0 + rho + theta;
  const double disc = (theta - tc) * (theta + (1.0 + sr) * (1.0 + sr));
  const double sq = std::sqrt(disc);
  SpectralPoint sp;
  sp.theta = theta;
  sp.z_plus = (s + sq) / (2.0 * rho);
  sp.z_minus = 2.0 / (s + sq);
  sp.alpha = sp.z_plus / (sp.z_plus - sp.z_minus);
  sp.m_factor = sp.z_minus * std::exp(sp.alpha * std::log(sp.z_plus / sp.z_minus));
  return sp;
}

namespace detail {

// Quadrature kernel for G_n = int_0^{z-} z^n (z+-z)^{-alpha}(z--z)^{alpha-1} dz.
// Panels graded toward z- where the (z--z)^{alpha-1} factor loses smoothness;
// a subdivision level splits every panel 2^level-fold. Node values of the
// z-independent kernel are cached so G_n for many n reuses one grid.
class GnKernel {
 public:
  GnKernel(const SpectralPoint& sp, int level) {
    const auto& gl = specfun::gauss_legendre(12);
    std::vector<double> edges =
        specfun::graded_edges(0.0, sp.z_minus, 0.5, 1e-13);
    const int sub = 1 << level;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const double w = (edges[i + 1] - edges[i]) / sub;
      for (int s = 0; s < sub; ++s) {
        const double a = edges[i] + s * w;
        const double half = 0.5 * w, mid = a + half;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
          const double z = mid + half * gl.nodes[k];
          nodes_.push_back(z);
          kernel_.push_back(half * gl.weights[k] *
                            std::exp(-sp.alpha * std::log(sp.z_plus - z) +
                                     (sp.alpha - 1.0) * std::log(sp.z_minus - z)));
        }
      }
    }
  }

  double value(int n) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      acc += kernel_[i] * std::pow(nodes_[i], n);
    return acc;
  }

  // tail sum_{l=n+1..} rho^l G_l with per-node power ladders; stops once ten
  // consecutive terms each contribute < 1e-16 relatively
  double tail_sum(int n, double rho) const {
    std::vector<double> pw(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      pw[i] = std::pow(nodes_[i], n + 1);
    double rl = std::pow(rho, n + 1);
    double acc = 0.0;
    int quiet = 0;
    for (int l = n + 1; l < 200000; ++l) {
      double g = 0.0;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        g += kernel_[i] * pw[i];
        pw[i] *= nodes_[i];
      }
      const double term = rl * g;
      acc += term;
      rl *= rho;
      if (term < 1e-16 * acc)
        ++quiet;
      else
        quiet = 0;
      if (quiet >= 10) return acc;
    }
    throw ConvergenceError("transform: tail of sum rho^l G_l did not certify");
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> kernel_;
};

// H_l ladder via the (stable, dominant-solution) upward recurrence
//   (l+1) rho H_{l+1} = (l+1)(1+rho+theta) H_l - l H_{l-1},  H_0 = 1.
inline std::vector<double> h_ladder(const QueueParams& p, double theta,
                                    int n_max) {
  std::vector<double> h(static_cast<std::size_t>(n_max) + 1);
  h[0] = 1.0;
  if (n_max >= 1) h[1] = (1.0 + p.rho() + theta) / p.rho();
  for (int l = 1; l < n_max; ++l)
    h[l + 1] = ((l + 1.0) * (1.0 + p.rho() + theta) * h[l] - l * h[l - 1]) /
               ((l + 1.0) * p.rho());
  return h;
}

}  // namespace detail

// G_n(theta) for theta > 0 (alpha > 1 keeps the integrand continuous at z-).
// Adaptive panel doubling until two successive levels agree to 1e-11 relative.
inline double g_n(const QueueParams& p, double theta, int n) {
  if (n < 0) throw DomainError("g_n: n must be >= 0");
  if (!(theta > 0.0)) throw DomainError("g_n: requires theta > 0");
  const SpectralPoint sp = spectral_point(p, theta);
  double prev = detail::GnKernel(sp, 0).value(n);
  for (int level = 1; level <= 6; ++level) {
    const double cur = detail::GnKernel(sp, level).value(n);
    if (std::abs(cur - prev) <= 1e-11 * std::abs(cur)) return cur;
    prev = cur;
  }
  throw ConvergenceError("g_n: quadrature did not stabilize");
}

// H_n(theta) = z_-^n 2F1(alpha, -n; 1; 1/(1-alpha)); all series terms are
// positive for alpha > 1, so the finite sum is cancellation-free.
inline double h_n(const QueueParams& p, double theta, int n) {
  if (n < 0) throw DomainError("h_n: n must be >= 0");
  const SpectralPoint sp = spectral_point(p, theta);
  if (sp.alpha == 1.0) throw DomainError("h_n: alpha == 1");
  return std::exp(n * std::log(sp.z_minus)) *
         specfun::hyp2f1_terminating(sp.alpha, n, 1.0 / (1.0 - sp.alpha));
}

// Relative residual of the discrete-Wronskian identity
//   G_l H_{l+1} - G_{l+1} H_l = 1 / ((l+1) rho^{l+1} M).
inline double wronskian_check(const QueueParams& p, double theta, int l) {
  if (l < 0) throw DomainError("wronskian_check: l must be >= 0");
  const SpectralPoint sp = spectral_point(p, theta);
  const double lhs = g_n(p, theta, l) * h_n(p, theta, l + 1) -
                     g_n(p, theta, l + 1) * h_n(p, theta, l);
  const double rhs =
      1.0 / ((l + 1.0) * std::pow(p.rho(), l + 1) * sp.m_factor);
  return std::abs(lhs - rhs) / std::abs(rhs);
}

// phat_n(theta) = M G_n sum_{l<=n} rho^l H_l + M H_n sum_{l>n} rho^l G_l.
inline double phat(const QueueParams& p, double theta, int n) {
  if (n < 0) throw DomainError("phat: n must be >= 0");
  if (!(theta > 0.0)) throw DomainError("phat: requires theta > 0");
  const SpectralPoint sp = spectral_point(p, theta);
  const auto h = detail::h_ladder(p, theta, n);
  double head = 0.0, rl = 1.0;
  for (int l = 0; l <= n; ++l) {
    head += rl * h[l];
    rl *= p.rho();
  }
  double prev = 0.0;
  for (int level = 0; level <= 6; ++level) {
    detail::GnKernel kern(sp, level);
    const double cur =
        sp.m_factor * (kern.value(n) * head + h[n] * kern.tail_sum(n, p.rho()));
    if (level > 0 && std::abs(cur - prev) <= 1e-11 * std::abs(cur)) return cur;
    prev = cur;
  }
  throw ConvergenceError("phat: quadrature did not stabilize");
}

// Closed form sum_{l>=0} rho^l H_l = (1 - rho z_-)^{alpha-1} / (1 - rho
// z_+)^alpha, valid for theta strictly inside (-(1-sqrt rho)^2, 0) where
// rho z_+ < 1.
inline double sum_rho_h_closed(const QueueParams& p, double theta) {
  const double tc = branch_point(p);
  if (!(theta > tc && theta < 0.0))
    throw DomainError("sum_rho_h_closed: theta must lie in (" +
                      std::to_string(tc) + ", 0)");
  const SpectralPoint sp = spectral_point(p, theta);
  const double rho = p.rho();
  return std::exp((sp.alpha - 1.0) * std::log(1.0 - rho * sp.z_minus) -
                  sp.alpha * std::log(1.0 - rho * sp.z_plus));
}

}  // namespace psq::transform
