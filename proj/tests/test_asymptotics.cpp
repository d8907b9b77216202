#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "psq/asymptotics.hpp"
#include "psq/oracles.hpp"
#include "psq/roots.hpp"

using namespace psq;
namespace as = psq::asym;

namespace {

double ode_value(double rho, int n, double t, double dt = 0.05) {
  auto p = validate_params(rho);
  oracle::OdeConfig cfg;
  cfg.certify = false;
  cfg.dt_max = dt;
  return oracle::ode_density(p, n, {t}, cfg)[n].values[0];
}

}  // namespace

TEST_CASE("solve_bracketed demands a sign change") {
  CHECK_THROWS_AS(
      roots::solve_bracketed([](double x) { return x * x + 1.0; }, 0.0, 1.0),
      BracketError);
}

TEST_CASE("regime classification on the spec points") {
  auto p = validate_params(0.5);
  CHECK(as::regime_classify(p, 40, 20.0).regime == RegimeCase::c1);
  CHECK(as::regime_classify(p, 400, 800.0).regime == RegimeCase::c2);
  CHECK(as::regime_classify(p, 100, 1000.0).regime == RegimeCase::c3);
  // n = 3, t = 1000: below the n <= t^{1/3} cutoff -> case 5 by default
  CHECK(as::regime_classify(p, 3, 1000.0).regime == RegimeCase::c5);
  as::ClassifierConfig no5;
  no5.enable_case5 = false;
  CHECK(as::regime_classify(p, 3, 1000.0, no5).regime == RegimeCase::c4c);
  // the three t^{2/3}-scale labels at large t (a = 0.3, 1.2, 2.0)
  CHECK(as::regime_classify(p, 3000, 1e6, no5).regime == RegimeCase::c4c);
  CHECK(as::regime_classify(p, 12000, 1e6, no5).regime == RegimeCase::c4b);
  CHECK(as::regime_classify(p, 20000, 1e6, no5).regime == RegimeCase::c4a);
}

TEST_CASE("boundary distance vanishes on the 4a/4b transition") {
  auto p = validate_params(0.5);
  const double ab = as::boundary_a_ab(p);
  CHECK(ab == Catch::Approx(1.6509636244).epsilon(1e-9));
  CHECK(as::boundary_a_bc(p) == Catch::Approx(0.9323881541).epsilon(1e-9));
  const int n = 100;
  const double t = std::pow(n / ab, 1.5);
  as::ClassifierConfig no5;
  no5.enable_case5 = false;
  no5.case3_ratio_cutoff = 1e9;  // force the a-based labels
  auto lab = as::regime_classify(p, n, t, no5);
  CHECK(std::abs(lab.boundary_distance) < 1e-10);
}

TEST_CASE("case 1 leading term and frozen oracle value") {
  auto p = validate_params(0.5);
  // Delta_1 = 0.75, leading term 0.75/40 = 0.01875
  const double v = as::case1_density(p, 40, 20.0);
  CHECK(v == Catch::Approx(0.0184995448).epsilon(1e-6));  // ODE-oracle frozen
  CHECK(std::abs(v - 0.01875) < 5e-4);
  CHECK_THROWS_AS(as::case1_density(p, 10, 20.0), DomainError);
}

TEST_CASE("case 1 at t = 0 is 1/(n+1) to O(1/n^2)") {
  auto p = validate_params(0.5);
  for (int n : {20, 50}) {
    const double v = as::case1_density(p, n, 0.0);
    CHECK(std::abs(v - 1.0 / (n + 1.0)) <= 2.0 / std::pow(n, 3));
  }
}

TEST_CASE("case 1 error halves-and-more when n doubles at fixed n/t") {
  const double e40 =
      std::abs(as::case1_density(validate_params(0.5), 40, 20.0) /
                   ode_value(0.5, 40, 20.0) -
               1.0);
  const double e80 =
      std::abs(as::case1_density(validate_params(0.5), 80, 40.0) /
                   ode_value(0.5, 80, 40.0) -
               1.0);
  CHECK(e80 < e40);
  CHECK(e80 < 1e-5);
}

TEST_CASE("case 2 matches case 1 deep on the Delta_2 > 0 side") {
  auto p = validate_params(0.5);
  const int n = 400;
  const double t = 560.0;  // Delta_2 = +6
  const double lead = std::pow(0.3, 1.0) / n;
  CHECK(as::case2_density(p, n, t) / lead == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("case 2 against the ODE oracle at the band center") {
  // frozen from the convergence study: 34% at n=400 (c ~ 6.7/sqrt(n)),
  // decreasing with n
  auto p = validate_params(0.5);
  const double r400 =
      as::case2_density(p, 400, 800.0) / ode_value(0.5, 400, 800.0, 0.1);
  CHECK(std::abs(r400 - 1.0) < 0.35);
  const double r100 =
      as::case2_density(p, 100, 200.0) / ode_value(0.5, 100, 200.0, 0.1);
  CHECK(std::abs(r400 - 1.0) < std::abs(r100 - 1.0));
}

TEST_CASE("case 2 rejects points far outside the band") {
  auto p = validate_params(0.5);
  CHECK_THROWS_AS(as::case2_density(p, 400, 1400.0), DomainError);
}

TEST_CASE("theta_star vanishes at the case-2/3 border ratio") {
  auto p = validate_params(0.5);
  CHECK(std::abs(as::theta_star(p, 0.5)) < 1e-14);
  CHECK(as::theta_star(p, 0.25) < 0.0);
}

TEST_CASE("case 3 against the ODE oracle (frozen log tolerance)") {
  auto p = validate_params(0.5);
  const double l100 = as::case3_log_density(p, 100, 400.0);
  const double o100 = std::log(ode_value(0.5, 100, 400.0, 0.1));
  const double rel100 = std::abs(l100 - o100) / std::abs(o100);
  CHECK(rel100 < 0.08);  // convergence study: 7.6%ча at n=100
  const double l50 = as::case3_log_density(p, 50, 200.0);
  const double o50 = std::log(ode_value(0.5, 50, 200.0, 0.1));
  CHECK(rel100 < std::abs(l50 - o50) / std::abs(o50));
  CHECK_THROWS_AS(as::case3_log_density(p, 300, 400.0), DomainError);
  CHECK_THROWS_AS(as::case3_log_density(p, 0, 400.0), DomainError);
}

TEST_CASE("solve_A endpoints and monotonicity") {
  auto p = validate_params(0.5);
  const double ab = as::boundary_a_ab(p);
  auto r = as::solve_A(p, ab);
  CHECK(r.value == 0.0);
  CHECK(r.residual <= 5e-11);
  double prev = 0.0;
  for (double a = ab * 1.01; a < 12.0; a *= 1.35) {
    const double A = as::solve_A(p, a).value;
    CHECK(A > prev);
    prev = A;
  }
  CHECK_THROWS_AS(as::solve_A(p, 0.9 * ab), DomainError);
}

TEST_CASE("solve_A large-a expansion") {
  auto p = validate_params(0.5);
  for (double a : {10.0, 30.0}) {
    const double A = as::solve_A(p, a).value;
    const double asymp = a * a * a / (4.0 * 0.5) - 3.0 * std::log(a) + 1.0 +
                         std::log(0.5);
    CHECK(A == Catch::Approx(asymp).epsilon(2e-4));
  }
}

TEST_CASE("solve_B stays in (0,1) with tiny residual") {
  auto p = validate_params(0.5);
  const double a = 0.5 * (as::boundary_a_ab(p) + as::boundary_a_bc(p));
  auto r = as::solve_B(p, a);
  CHECK(r.value > 0.0);
  CHECK(r.value < 1.0);
  CHECK(r.residual <= 5e-11);
  CHECK_THROWS_AS(as::solve_B(p, 2.0), DomainError);
}

TEST_CASE("solve_C endpoints") {
  auto p = validate_params(0.5);
  const double bc = as::boundary_a_bc(p);
  auto r = as::solve_C(p, bc);
  CHECK(r.value == Catch::Approx(1.0).margin(1e-10));
  CHECK(r.residual <= 1e-10);
  for (double a : {0.05, 0.01}) {
    const double C = as::solve_C(p, a).value;
    const double lin = std::pow(specfun::kPi / (2.0 * std::sqrt(0.5)), 2.0 / 3.0) * a;
    CHECK(C == Catch::Approx(lin).epsilon(5e-3));
  }
  CHECK_THROWS_AS(as::solve_C(p, 1.2), DomainError);
}

namespace {

// two-point linear extrapolation of Lambda and Phi onto a transition curve
std::pair<double, double> extrapolate_case4(const QueueParams& p, double a0,
                                            double t, int side) {
  const double h = 1e-3 * a0 * side;
  auto b1 = as::case4_branch(p, (a0 + 2.0 * h) * std::pow(t, 2.0 / 3.0), t);
  auto b2 = as::case4_branch(p, (a0 + h) * std::pow(t, 2.0 / 3.0), t);
  return {2.0 * b2.lambda - b1.lambda, 2.0 * b2.phi - b1.phi};
}

}  // namespace

TEST_CASE("case 4 branch continuity across both transition curves") {
  auto p = validate_params(0.5);
  const double t = 1e6;
  for (double a0 : {as::boundary_a_ab(p), as::boundary_a_bc(p)}) {
    auto [lamL, phiL] = extrapolate_case4(p, a0, t, -1);
    auto [lamR, phiR] = extrapolate_case4(p, a0, t, +1);
    CAPTURE(a0);
    CHECK(lamL == Catch::Approx(lamR).epsilon(1e-6));
    CHECK(phiL == Catch::Approx(phiR).epsilon(1e-6));
  }
}

TEST_CASE("case 4 matches the ODE oracle across all three branches") {
  auto p = validate_params(0.5);
  const double t = 1000.0;
  for (double a : {0.5, 1.2, 2.0}) {
    const int n = static_cast<int>(std::lround(a * std::pow(t, 2.0 / 3.0)));
    const double lode = std::log(ode_value(0.5, n, t, 0.1));
    const double lasy = as::case4_log_density(p, n, t);
    CAPTURE(a, n);
    // frozen from the study: max |log rel| 1.3e-3 at t=1000
    CHECK(std::abs(lasy - lode) / std::abs(lode) < 2e-3);
  }
}

TEST_CASE("case 5 constants are e and 2e") {
  CHECK(as::contour_series_constant(0) ==
        Catch::Approx(std::exp(1.0)).epsilon(1e-12));
  CHECK(as::contour_series_constant(1) ==
        Catch::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
}

TEST_CASE("case 5 against the ODE oracle, improving in t") {
  auto p = validate_params(0.5);
  // convergence study: density ratio 2.42 at t=50, 1.43 at t=200 (frozen)
  const double r50 = as::case5_density(p, 2, 50.0) / ode_value(0.5, 2, 50.0);
  CHECK(r50 < 2.6);
  CHECK(r50 > 1.0);
  const double r200 = as::case5_density(p, 2, 200.0) / ode_value(0.5, 2, 200.0, 0.1);
  CHECK(r200 < r50);
  // the acceptance metric (log-density relative error) is already small here
  const double lrel = std::abs(std::log(r50)) /
                      std::abs(std::log(ode_value(0.5, 2, 50.0)));
  CHECK(lrel < 0.08);
}

TEST_CASE("matching 2-3 agrees with both flanks at the study point") {
  // overlap needs |Delta_2| ~ 16 with delta = (1-rho) - n/t ~ 3e-4 before the
  // O(Delta_2^2 delta) and O(1/Delta_2^2) closure terms both drop below 10%
  auto p = validate_params(0.5);
  const double r = 0.4997;  // delta = 3e-4 with Delta_2 = -16
  const double sn = 16.0 * r / 3e-4;
  const double n = sn * sn, t = n / r;
  const double lm = as::matching_log_density(p, as::MatchingPair::m23, n, t);
  const double lc3 = as::case3_log_density(p, n, t);
  CHECK(std::exp(lm - lc3) == Catch::Approx(1.0).margin(0.05));
  const double c2 = as::case2_density(p, n, t, 18.0);
  CHECK(std::exp(lm) / c2 == Catch::Approx(1.0).margin(0.10));
  CHECK_THROWS_AS(as::matching_log_density(p, as::MatchingPair::m23, 400, 810.0),
                  DomainError);
}

TEST_CASE("matching 3-4a agrees with case 4a deep in the strip") {
  auto p = validate_params(0.5);
  const double t = 1e8;
  const double n = 60.0 * std::pow(t, 2.0 / 3.0);
  const double lm = as::matching_log_density(p, as::MatchingPair::m34, n, t);
  const double l4 = as::case4_log_density(p, n, t);
  CHECK(std::exp(lm - l4) == Catch::Approx(1.0).margin(0.05));
  CHECK_THROWS_AS(as::matching_log_density(p, as::MatchingPair::m34, 100, 400.0),
                  DomainError);
}

TEST_CASE("matching 4c-5 agrees with case 4c and uses the saddle constant") {
  auto p = validate_params(0.5);
  const double t = 1e6;
  for (double n : {30.0, 100.0}) {
    const double lm = as::matching_log_density(p, as::MatchingPair::m45, n, t);
    const double l4 = as::case4_log_density(p, n, t);
    CAPTURE(n);
    CHECK(std::exp(lm - l4) == Catch::Approx(1.0).margin(0.06));
  }
  // (4.17): the contour constant's n -> infinity form
  const int n = 400;
  const double s417 = std::sqrt(std::exp(1.0)) * std::exp(2.0 * std::sqrt(n)) /
                      (2.0 * std::sqrt(specfun::kPi) * std::pow(n, 0.25));
  CHECK(as::contour_series_constant(n) / s417 ==
        Catch::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(as::matching_log_density(p, as::MatchingPair::m45, 2, 1e6),
                  DomainError);
}

TEST_CASE("ray fan geometry") {
  auto p = validate_params(0.5);
  auto fan = as::trace_rays(p, 3, 6, 100.0, 4.0);
  REQUIRE(fan.rays.size() == 6);

  // transition curves carry the closed-form coefficients
  const double ab = as::boundary_a_ab(p), bc = as::boundary_a_bc(p);
  const auto& dpt = fan.curve_dashed.pts.back();
  CHECK(dpt[1] == Catch::Approx(ab * std::pow(dpt[0], 2.0 / 3.0)).epsilon(1e-12));

  // the p = 0 ray runs along the dashed curve
  const auto& zero_ray = fan.rays[0];
  for (const auto& pt : zero_ray.pts) {
    if (pt[0] < 0.5) continue;
    CHECK(pt[1] ==
          Catch::Approx(ab * std::pow(pt[0], 2.0 / 3.0)).epsilon(0.01));
  }

  // region-1 rays never return to Y = 0; returning rays peak on the dotted
  // curve
  for (std::size_t i = 0; i < fan.rays.size(); ++i) {
    const auto& ray = fan.rays[i];
    const bool returned = ray.pts.back()[1] <= 1e-6;
    double ymax = 0.0, tmax_at = 0.0;
    for (const auto& pt : ray.pts)
      if (pt[1] > ymax) {
        ymax = pt[1];
        tmax_at = pt[0];
      }
    if (i < 3) {
      CHECK_FALSE(returned);
    } else {
      CHECK(returned);
      const double a_peak = ymax * std::pow(tmax_at, -2.0 / 3.0);
      CHECK(a_peak == Catch::Approx(bc).epsilon(0.02));
    }
  }
}
