#pragma once

// Bracketed scalar root solving: bisection to a tight interval, then Newton
// polish with a secant-estimated derivative.

#include <cmath>
#include <functional>
#include <string>

#include "psq/core.hpp"
#include "psq/errors.hpp"

namespace psq::roots {

template <class F>
RootResult solve_bracketed(F&& f, double lo, double hi,
                           double tol_abs = 1e-10, int max_iter = 400) {
  double flo = f(lo), fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi))
    throw BracketError("solve_bracketed: non-finite endpoint value");
  if (flo == 0.0) return {lo, 0.0, 0, {lo, hi}};
  if (fhi == 0.0) return {hi, 0.0, 0, {lo, hi}};
  if ((flo > 0.0) == (fhi > 0.0))
    throw BracketError("solve_bracketed: no sign change on [" +
                       std::to_string(lo) + ", " + std::to_string(hi) + "]");
  RootResult out;
  out.bracket = {lo, hi};
  double a = lo, b = hi, fa = flo, fb = fhi;
  int it = 0;
  // bisect until the interval is small relative to its location
  while (it < max_iter && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b))) {
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    ++it;
    if (fm == 0.0) {
      out.value = mid;
      out.residual = 0.0;
      out.iterations = it;
      return out;
    }
    if ((fm > 0.0) == (fa > 0.0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
      fb = fm;
    }
  }
  double x = (std::abs(fa) < std::abs(fb)) ? a : b;
  double fx = (std::abs(fa) < std::abs(fb)) ? fa : fb;
  // Newton polish; keep iterates inside the box
  for (int k = 0; k < 6 && std::abs(fx) > 0.0; ++k) {
    const double h = 1e-7 * (1.0 + std::abs(x));
    const double dfdx = (f(x + h) - f(x - h)) / (2.0 * h);
    if (dfdx == 0.0 || !std::isfinite(dfdx)) break;
    double xn = x - fx / dfdx;
    if (!(xn > lo && xn < hi)) break;
    const double fn = f(xn);
    ++it;
    if (!std::isfinite(fn) || std::abs(fn) >= std::abs(fx)) break;
    x = xn;
    fx = fn;
  }
  out.value = x;
  out.residual = fx;
  out.iterations = it;
  if (std::abs(fx) > tol_abs)
    throw ConvergenceError("solve_bracketed: residual " + std::to_string(fx) +
                           " above tolerance " + std::to_string(tol_abs));
  return out;
}

}  // namespace psq::roots
