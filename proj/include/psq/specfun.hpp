#pragma once

// Self-contained special functions and quadrature primitives: log-gamma,
// modified Bessel K0/K1, terminating 2F1, overflow-safe logistic, and cached
// Gauss-Legendre rules.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "psq/errors.hpp"

namespace psq::specfun {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;
inline constexpr double kPi = 3.14159265358979323846264338;

// ln Gamma(x), x > 0, via Lanczos (g = 7, 9 terms); relative error well
// below the 1e-12 contract. Reflection covers x < 0.5.
inline double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0)
    throw DomainError("log_gamma: requires x > 0, got " + std::to_string(x));
  static const double c[9] = {
      0.99999999999980993,    676.5203681218851,    -1259.1392167224028,
      771.32342877765313,     -176.61502916214059,  12.507343278686905,
      -0.13857109526572012,   9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return std::log(kPi / std::sin(kPi * x)) - log_gamma(1.0 - x);
  }
  double z = x - 1.0;
  double acc = c[0];
  for (int i = 1; i < 9; ++i) acc += c[i] / (z + i);
  double t = z + 7.5;
  return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t +
         std::log(acc);
}

namespace detail {

// ascending series, x < 2: K via the standard logarithmic series for K0 and
// the Wronskian I0 K1 + I1 K0 = 1/x for K1
inline void bessel_k_series(double x, double& k0, double& k1) {
  const double q = 0.25 * x * x;
  double i0 = 1.0, i1 = 0.5 * x;
  double s0 = 0.0;            // sum (q^k/(k!)^2) H_k
  double term0 = 1.0, term1 = 0.5 * x;
  double hk = 0.0;
  for (int k = 1; k < 60; ++k) {
    term0 *= q / (static_cast<double>(k) * k);
    term1 *= q / (static_cast<double>(k) * (k + 1));
    hk += 1.0 / k;
    i0 += term0;
    i1 += term1;
    s0 += term0 * hk;
    if (term0 < 1e-18 * i0 && term1 < 1e-18 * i1) break;
  }
  const double lg = std::log(0.5 * x) + kEulerGamma;
  k0 = -lg * i0 + s0;
  k1 = (1.0 / x - i1 * k0) / i0;
}

// Temme's continued fraction (CF2), x >= 2, order mu = 0.
inline void bessel_k_cf2(double x, double& k0, double& k1) {
  const double eps = 1e-16;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 5000; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < eps) {
      k0 = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
      k1 = k0 * (x + 0.5 - a1 * h) / x;
      return;
    }
  }
  throw ConvergenceError("bessel_k: CF2 did not converge at x = " +
                         std::to_string(x));
}

}  // namespace detail

// Modified Bessel function K_order(x), order in {0,1}, x > 0.
inline double bessel_k(int order, double x) {
  if (order != 0 && order != 1)
    throw DomainError("bessel_k: order must be 0 or 1");
  if (!std::isfinite(x) || x <= 0.0)
    throw DomainError("bessel_k: requires x > 0");
  double k0, k1;
  if (x < 2.0)
    detail::bessel_k_series(x, k0, k1);
  else
    detail::bessel_k_cf2(x, k0, k1);
  return order == 0 ? k0 : k1;
}

// Terminating Gauss hypergeometric sum
//   2F1(alpha, -n; 1; x) = sum_{k=0..n} (alpha)_k (-n)_k / ((1)_k k!) x^k,
// evaluated as the exact degree-n polynomial.
inline double hyp2f1_terminating(double alpha, int n, double x) {
  if (n < 0) throw DomainError("hyp2f1_terminating: n must be >= 0");
  if (!std::isfinite(alpha) || !std::isfinite(x))
    throw DomainError("hyp2f1_terminating: non-finite input");
  double sum = 1.0, term = 1.0;
  for (int k = 0; k < n; ++k) {
    term *= (alpha + k) * (k - n) / ((k + 1.0) * (k + 1.0)) * x;
    sum += term;
  }
  return sum;
}

// 1/(1 + e^x) without overflow for any real x (including +-inf).
inline double logistic(double x) {
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

// log(1/(1 + e^x)), the companion used inside merged exponents.
inline double log_logistic(double x) {
  if (x > 0.0) return -x - std::log1p(std::exp(-x));
  return -std::log1p(std::exp(x));
}

struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing in (-1,1)
  std::vector<double> weights;  // positive, sum 2
};

// m-point Gauss-Legendre rule on [-1,1]; Newton iteration on P_m, cached.
inline const QuadratureRule& gauss_legendre(int m) {
  if (m < 1 || m > 10000)
    throw DomainError("gauss_legendre: m out of range [1,1e4]");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it != cache.end()) return *it->second;

  auto rule = std::make_unique<QuadratureRule>();
  rule->nodes.resize(m);
  rule->weights.resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule->nodes[i] = -x;
    rule->nodes[m - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule->weights[i] = w;
    rule->weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) rule->nodes[m / 2] = 0.0;
  const QuadratureRule& ref = *rule;
  cache.emplace(m, std::move(rule));
  return ref;
}

// Composite Gauss-Legendre over consecutive panels [edges[i], edges[i+1]].
template <class F>
double panel_integrate(F&& f, const std::vector<double>& edges, int m = 16) {
  const QuadratureRule& gl = gauss_legendre(m);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double half = 0.5 * (edges[i + 1] - edges[i]);
    const double mid = 0.5 * (edges[i + 1] + edges[i]);
    double acc = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k)
      acc += gl.weights[k] * f(mid + half * gl.nodes[k]);
    total += half * acc;
  }
  return total;
}

// Panel edges geometrically refined toward `to` (a singular-ish endpoint),
// starting from `from`; ratio in (0,1).
inline std::vector<double> graded_edges(double from, double to, double ratio,
                                        double min_gap_rel) {
  std::vector<double> edges{from};
  double gap = to - from;
  while (std::abs(gap) > std::abs(to - from) * min_gap_rel) {
    gap *= ratio;
    edges.push_back(to - gap);
  }
  edges.push_back(to);
  return edges;
}

}  // namespace psq::specfun
