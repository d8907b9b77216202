#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "psq/errors.hpp"

namespace psq {

// All tolerances in one record so CLI runs are reproducible from the echoed
// config alone.
struct Tolerances {
  double root_abs = 1e-10;   // absolute residual for bracketed root solves
  double quad_rel = 1e-8;    // relative target for adaptive quadrature
  double ode_abs = 1e-8;     // ODE truncation certification
  double pollaczek_rel = 1e-8;  // coefficient stabilization across refinement
};

// Traffic intensity with service rate fixed at 1, so lambda = rho and
// epsilon = 1 - rho is derived, never stored.
class QueueParams {
 public:
  static QueueParams validated(double rho) {
    if (!std::isfinite(rho) || rho <= 0.0 || rho > 1.0)
      throw DomainError("rho must be finite and in (0,1]; got " +
                        std::to_string(rho));
    return QueueParams(rho);
  }

  double rho() const { return rho_; }
  double epsilon() const { return 1.0 - rho_; }
  // rho = 1 is admitted only for the heavy-traffic Pollaczek kernel.
  bool heavy_traffic_kernel_only() const { return rho_ == 1.0; }

  void require_stationary(const char* where) const {
    if (rho_ >= 1.0)
      throw DomainError(std::string(where) + " requires rho < 1");
  }

 private:
  explicit QueueParams(double rho) : rho_(rho) {}
  double rho_;
};

inline QueueParams validate_params(double rho) {
  return QueueParams::validated(rho);
}

enum class Method {
  exact,
  ode,
  mc,
  asymptotic_case1,
  asymptotic_case2,
  asymptotic_case3,
  asymptotic_case4,
  asymptotic_case5,
  ht_case1,
  ht_case2,
  ht_case3,
  ht_case4,
};

inline std::string to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::ode: return "ode";
    case Method::mc: return "mc";
    case Method::asymptotic_case1: return "asymptotic-case-1";
    case Method::asymptotic_case2: return "asymptotic-case-2";
    case Method::asymptotic_case3: return "asymptotic-case-3";
    case Method::asymptotic_case4: return "asymptotic-case-4";
    case Method::asymptotic_case5: return "asymptotic-case-5";
    case Method::ht_case1: return "ht-case-1";
    case Method::ht_case2: return "ht-case-2";
    case Method::ht_case3: return "ht-case-3";
    case Method::ht_case4: return "ht-case-4";
  }
  return "?";
}

// One sojourn-density curve p_n(.) on a time grid.
struct DensityCurve {
  int n = 0;
  std::vector<double> t_grid;
  std::vector<double> values;
  Method method = Method::exact;
  // set when an asymptotic method produced values outside its validity region
  bool positivity_flag = false;

  DensityCurve() = default;
  DensityCurve(int n_, std::vector<double> t, std::vector<double> v, Method m)
      : n(n_), t_grid(std::move(t)), values(std::move(v)), method(m) {
    if (n < 0) throw DomainError("DensityCurve: n must be >= 0");
    if (t_grid.size() != values.size())
      throw DomainError("DensityCurve: grid/value length mismatch");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      if (t_grid[i] < 0.0)
        throw DomainError("DensityCurve: negative time");
      if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
        throw DomainError("DensityCurve: time grid must be strictly increasing");
    }
    const bool oracle_like =
        method == Method::exact || method == Method::ode || method == Method::mc;
    for (double val : values) {
      if (val < 0.0) {
        if (oracle_like)
          throw DomainError("DensityCurve: negative density from an exact/oracle method");
        positivity_flag = true;  // asymptotic value outside its validity region
      }
    }
  }
};

struct RootResult {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::pair<double, double> bracket{0.0, 0.0};
};

enum class Theorem { rho_fixed, heavy_traffic };

enum class RegimeCase { c1, c2, c3, c4a, c4b, c4c, c5 };

inline std::string to_string(RegimeCase c) {
  switch (c) {
    case RegimeCase::c1: return "1";
    case RegimeCase::c2: return "2";
    case RegimeCase::c3: return "3";
    case RegimeCase::c4a: return "4a";
    case RegimeCase::c4b: return "4b";
    case RegimeCase::c4c: return "4c";
    case RegimeCase::c5: return "5";
  }
  return "?";
}

struct RegimeLabel {
  Theorem theorem = Theorem::rho_fixed;
  RegimeCase regime = RegimeCase::c1;
  // signed distance to the nearest regime boundary in the coordinate that
  // defines it (a for the case-4 sub-branches, band offset for 1/2/3,
  // sigma offset for the heavy-traffic curves); positive = interior.
  double boundary_distance = 0.0;

  RegimeLabel() = default;
  RegimeLabel(Theorem th, RegimeCase c, double d)
      : theorem(th), regime(c), boundary_distance(d) {
    if (th == Theorem::heavy_traffic && c == RegimeCase::c5)
      throw DomainError("RegimeLabel: heavy traffic has no case 5");
  }
};

}  // namespace psq
