#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "psq/exact.hpp"
#include "psq/heavytraffic.hpp"
#include "psq/oracles.hpp"

using namespace psq;
namespace h = psq::ht;
namespace sf = psq::specfun;

namespace {

double ode_value(double rho, int n, double t, double dt = 0.1) {
  auto p = validate_params(rho);
  oracle::OdeConfig cfg;
  cfg.certify = false;
  cfg.dt_max = dt;
  return oracle::ode_density(p, n, {t}, cfg)[n].values[0];
}

}  // namespace

TEST_CASE("HtScaling derives all four scaled variables consistently") {
  auto s = h::HtScaling::from(0.1, 200.0, 3000.0);
  CHECK(s.xi == Catch::Approx(20.0));
  CHECK(s.tau == Catch::Approx(300.0));
  CHECK(s.eta == Catch::Approx(2.0));
  CHECK(s.sigma == Catch::Approx(3.0));
  CHECK_THROWS_AS(h::HtScaling::from(1.5, 1.0, 1.0), DomainError);
}

TEST_CASE("ht case 1 keeps the initial condition and the rho->1 limit") {
  CHECK(std::abs(h::ht_case1_density(2, 0.0) - 1.0 / 3.0) <= 1e-8);
  CHECK(h::ht_case1_density(2, 3.0) >= 0.0);
  // Richardson-style limit of the rho < 1 kernel toward rho = 1
  exact::PollaczekEvaluator e95(0.95), e99(0.99);
  const double v95 = e95.density(2, 3.0), v99 = e99.density(2, 3.0);
  const double extrap = v99 + (v99 - v95) * 0.01 / 0.04;
  CHECK(h::ht_case1_density(2, 3.0) ==
        Catch::Approx(extrap).epsilon(5e-3));
}

TEST_CASE("solve_u: residual, complex-form identity, expansion, monotone") {
  auto r = h::solve_u(0.256);
  CHECK(r.value == Catch::Approx(1.6142746397).epsilon(1e-9));
  CHECK(std::abs(r.residual) <= 1e-12);
  // small-sigma expansion u = (pi/4 sigma)^{1/3} + 2/(3 pi) + O(sigma^{1/3})
  double prev_gap = 1.0;
  for (double s : {1e-3, 1e-5}) {
    const double u = h::solve_u(s).value;
    const double lead = std::pow(specfun::kPi / (4.0 * s), 1.0 / 3.0);
    const double gap = std::abs(u - lead - 2.0 / (3.0 * specfun::kPi));
    CHECK(gap < prev_gap);
    CHECK(gap < 0.02);
    prev_gap = gap;
  }
  double prev = h::solve_u(0.01).value;
  for (double s = 0.02; s <= 10.0; s *= 1.7) {
    const double u = h::solve_u(s).value;
    CHECK(u < prev);
    prev = u;
  }
  CHECK_THROWS_AS(h::solve_u(0.0), DomainError);
}

TEST_CASE("ht case 2 against the ODE oracle (frozen)") {
  // study: density ratio 0.897, log-relative 0.0028 at eps=0.05, sigma=0.256
  const double eps = 0.05, sigma = 0.256;
  const double t = sigma / (eps * eps * eps);
  const double lode = std::log(ode_value(0.95, 1, t));
  const double l2 = h::ht_case2_log_density(eps, 1, sigma);
  CHECK(std::abs(l2 - lode) / std::abs(lode) < 0.01);
  CHECK(std::exp(l2 - lode) == Catch::Approx(1.0).margin(0.15));
  CHECK(h::ht_case2_density(0.05, 1, 1.0) > 0.0);
}

TEST_CASE("matching 1-2 is the small-sigma face of ht case 2") {
  const double t = 1000.0;
  const double lm = h::ht_matching12_log_density(1, t);
  for (double eps : {1e-3, 2e-4}) {
    const double l2 = h::ht_case2_log_density(eps, 1, t * eps * eps * eps);
    CAPTURE(eps);
    CHECK(std::exp(lm - l2) == Catch::Approx(1.0).margin(0.06));
  }
}

TEST_CASE("ht case 3 closed forms") {
  const double eps = 0.1;
  // leading term at xi = tau
  const double one = eps / 2.0 * std::exp(-1.0);
  CHECK(h::ht_case3_density(eps, 2.0, 2.0) ==
        Catch::Approx(one + eps * eps * (1.0 / 4.0 + 4.0 / 16.0 - 12.0 / 32.0 +
                                         8.0 / (3.0 * 32.0)) *
                                std::exp(-1.0))
            .epsilon(1e-12));
  // tau = 0 agrees with 1/(n+1) = eps/(xi+eps) through O(eps^2)
  const double xi = 2.0;
  const double v0 = h::ht_case3_density(eps, xi, 0.0);
  const double exact0 = eps / (xi + eps);
  CHECK(std::abs(v0 - exact0) <= 2.0 * eps * eps * eps / (xi * xi * xi));
  CHECK_THROWS_AS(h::ht_case3_density(eps, 0.0, 1.0), DomainError);
}

TEST_CASE("ht case 3 two-term beats one-term against the ODE") {
  const double eps = 0.1;
  const double ode = ode_value(0.9, 20, 30.0, 0.05);
  const double one = eps / 2.0 * std::exp(-1.5);
  const double two = h::ht_case3_density(eps, 2.0, 3.0);
  CHECK(std::abs(two - ode) <= std::abs(one - ode));
  CHECK(std::abs(two - ode) / ode < 0.02);  // frozen: 1.2e-2
}

TEST_CASE("region curves and classification") {
  CHECK(h::curve_sigma1(9.0) == Catch::Approx(9.0 - 8.0 / 3.0));
  CHECK(h::ht_region_classify(9.0, 1.0).regime == RegimeCase::c4a);
  CHECK(h::ht_region_classify(1.0, 100.0).regime == RegimeCase::c4c);
  CHECK(h::ht_region_classify(2.0, 0.3).regime == RegimeCase::c4b);
  const double c1 = h::curve_sigma1(9.0);
  CHECK(std::abs(h::ht_region_classify(9.0, c1).boundary_distance) < 1e-12);
  CHECK_THROWS_AS(h::ht_region_classify(-1.0, 1.0), DomainError);
}

TEST_CASE("Atilde vanishes on the dashed curve") {
  const double eta = 9.0;
  const double c1 = h::curve_sigma1(eta);
  auto r = h::solve_Atilde(eta, c1 * (1.0 - 1e-7));
  CHECK(r.value < 1e-5);
  CHECK(r.residual <= 5e-11);
  CHECK_THROWS_AS(h::solve_Atilde(eta, c1 + 0.1), RegionError);
  CHECK_THROWS_AS(h::solve_Atilde(3.0, 0.1), RegionError);
}

TEST_CASE("Ctilde = 1/eta on the dotted curve to 1e-10") {
  // direct residual of the implicit equation at Ctilde = 1/eta on the curve
  for (double eta : {0.5, 2.0, 4.0, 9.0}) {
    const double sigma = h::curve_sigma2(eta);
    const double Ct = 1.0 / eta;
    const double resid =
        2.0 * Ct * std::sqrt(Ct) * sigma -
        (sf::kPi + 2.0 * std::sqrt(Ct) / (1.0 + 4.0 * Ct) -
         std::asin(std::sqrt(Ct * eta)) -
         std::asin(std::sqrt(4.0 * Ct / (1.0 + 4.0 * Ct))) +
         std::sqrt(Ct * eta * (1.0 - Ct * eta)));
    CAPTURE(eta);
    CHECK(std::abs(resid) <= 1e-10);
  }
}

TEST_CASE("Ctilde tends to (pi/(2 sigma))^{2/3} for large sigma") {
  const double eta = 1.0, sigma = 1000.0;
  const double Ct = h::solve_Ctilde(eta, sigma).value;
  CHECK(Ct == Catch::Approx(std::pow(sf::kPi / (2.0 * sigma), 2.0 / 3.0))
                  .epsilon(0.02));
}

TEST_CASE("Btilde solves inside its band") {
  const double eta = 9.0;
  const double sigma = 0.5 * (h::curve_sigma1(eta) + h::curve_sigma2(eta));
  auto r = h::solve_Btilde(eta, sigma);
  CHECK(r.value > 0.0);
  CHECK(r.value < 1.0 / eta);
  CHECK(r.residual <= 5e-11);
  CHECK_THROWS_AS(h::solve_Btilde(eta, h::curve_sigma2(eta) * 1.5), RegionError);
}

namespace {

std::pair<double, double> extrapolate_ht(double eta, double s0, int side) {
  const double hh = 1e-3 * s0 * side;
  auto b1 = h::ht_case4_branch(eta, s0 + 2.0 * hh);
  auto b2 = h::ht_case4_branch(eta, s0 + hh);
  return {2.0 * b2.lambda - b1.lambda, 2.0 * b2.phi - b1.phi};
}

}  // namespace

TEST_CASE("ht case 4 branch continuity across both curves") {
  {
    const double eta = 9.0, s0 = h::curve_sigma1(eta);
    auto [lamL, phiL] = extrapolate_ht(eta, s0, -1);
    auto [lamR, phiR] = extrapolate_ht(eta, s0, +1);
    CHECK(lamL == Catch::Approx(lamR).epsilon(1e-6));
    CHECK(phiL == Catch::Approx(phiR).epsilon(1e-6));
  }
  {
    const double eta = 2.0, s0 = h::curve_sigma2(eta);
    auto [lamL, phiL] = extrapolate_ht(eta, s0, -1);
    auto [lamR, phiR] = extrapolate_ht(eta, s0, +1);
    CHECK(lamL == Catch::Approx(lamR).epsilon(1e-6));
    CHECK(phiL == Catch::Approx(phiR).epsilon(1e-6));
  }
}

TEST_CASE("ht case 4a tends to case 3 as eta grows at fixed sigma") {
  const double eps = 0.05, sigma = 1.0;
  double prev = 1.0;
  for (double eta : {40.0, 80.0}) {
    const double l4 = h::ht_case4_log_density(eps, eta, sigma);
    const double xi = eta / eps, tau = sigma / (eps * eps);
    const double l3 = std::log(h::ht_case3_density(eps, xi, tau));
    const double diff = std::abs(l4 - l3);
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 0.02);  // frozen: 1.1e-2 at eta = 80
}

TEST_CASE("matching 2-4c is the small-eta face of ht case 4c") {
  // flank tolerances frozen from the study (S_n and eps n closure terms)
  const double sigma = 1.0;
  {
    const double eps = 0.005;
    const double eta = eps * eps * 16.0;
    const double lm = h::ht_matching24_log_density(eps, eta, sigma);
    const double l4 = h::ht_case4_log_density(eps, eta, sigma);
    CHECK(std::exp(lm - l4) == Catch::Approx(1.0).margin(0.08));
  }
  {
    const double eps = 0.002;
    const int n = 64;
    const double eta = eps * eps * n;
    const double lm = h::ht_matching24_log_density(eps, eta, sigma);
    const double l4 = h::ht_case4_log_density(eps, eta, sigma);
    CHECK(std::exp(lm - l4) == Catch::Approx(1.0).margin(0.08));
    const double l2 = h::ht_case2_log_density(eps, n, sigma);
    CHECK(std::exp(lm - l2) == Catch::Approx(1.0).margin(0.10));
  }
}

TEST_CASE("conditional law (2.43) integrates to one over xi") {
  const double tau = 4.0;
  // integrate p(n|t) dn = (1/(2 xi K0)) e^{-xi - tau/xi} dxi by fine panels
  const double k0 = sf::bessel_k(0, 2.0 * std::sqrt(tau));
  std::vector<double> edges;
  for (double x = 1e-6; x < 60.0; x += 0.01) edges.push_back(x);
  const double integral = sf::panel_integrate(
      [&](double xi) {
        return 1.0 / (2.0 * xi * k0) * std::exp(-xi - tau / xi);
      },
      edges, 8);
  CHECK(integral == Catch::Approx(1.0).epsilon(0.02));
  // through the API: p(n|t) dn with xi = eps n
  const double eps = 0.05, t = tau / eps;
  double api_sum = 0.0;
  for (int n = 1; n <= 3000; ++n)
    api_sum += h::conditional_law_xi(eps, n, t);
  CHECK(api_sum == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("conditional law (2.44) peaks at xi = sqrt(tau)") {
  const double eps = 0.05, tau = 4.0, t = tau / eps;
  double best = -1.0;
  int argmax = -1;
  for (int n = 1; n <= 200; ++n) {
    const double v = h::conditional_law_xi_gauss(eps, n, t);
    if (v > best) {
      best = v;
      argmax = n;
    }
  }
  // xi = eps n peaks at sqrt(tau) = 2, so n = 40
  CHECK(argmax == 40);
}

TEST_CASE("Q(sigma) is positive across the sweep") {
  for (double s = 0.1; s <= 10.0; s *= 1.45) {
    CAPTURE(s);
    CHECK(h::q_factor(s) > 0.0);
    CHECK(h::solve_Chat(s).residual <= 5e-11);
  }
  CHECK(h::conditional_law_eta(0.05, 800, 8000.0) > 0.0);
}

TEST_CASE("Morrison tau-scale matches the ODE unconditional density") {
  auto p = validate_params(0.95);
  const double eps = 0.05, tau = 1.0, t = tau / eps;
  const double ode = exact::unconditional_density(p, t, 1e-8);
  const double m = h::morrison_pt(eps, h::MorrisonScale::tau_scale, t);
  CHECK(m == Catch::Approx(ode).epsilon(0.10));
}

TEST_CASE("Morrison sigma-scale: monotone sigma(psi) and ODE agreement") {
  CHECK(h::morrison_sigma_of_psi(1e-4) < 1e-12);
  double prev = 0.0;
  for (double psi = 0.05; psi < sf::kPi - 0.05; psi += 0.05) {
    const double s = h::morrison_sigma_of_psi(psi);
    CHECK(s > prev);
    prev = s;
  }
  // frozen from the study: ratios 1.03 (sigma=0.5) and 0.96 (sigma=1.0)
  const double eps = 0.1;
  auto p = validate_params(0.9);
  for (double sigma : {0.5, 1.0}) {
    const double t = sigma / (eps * eps * eps);
    const double ode = exact::unconditional_density(p, t, 1e-10);
    const double m = h::morrison_pt(eps, h::MorrisonScale::sigma_scale, t);
    CAPTURE(sigma);
    CHECK(m == Catch::Approx(ode).epsilon(0.10));
  }
}

TEST_CASE("heavy-traffic ray fan geometry") {
  auto fan = h::ht_trace_rays(3, 6, 150.0, 30.0);
  REQUIRE(fan.rays.size() == 6);
  // the eta0 = 4 ray is exactly sigma = eta^{3/2}/3 - 8/3
  const auto& dashed_ray = fan.rays[0];
  for (const auto& pt : dashed_ray.pts) {
    if (pt[1] < 0.5) continue;  // sigma small: curve near its start
    CHECK(pt[1] ==
          Catch::Approx(h::curve_sigma1(pt[0])).epsilon(0.01));
  }
  // rays from eta0 > 4 never return; rays from eta0 < 4 peak on the dotted
  // curve and then hit the axis
  for (std::size_t i = 1; i < fan.rays.size(); ++i) {
    const auto& ray = fan.rays[i];
    const bool returned = ray.pts.back()[0] <= 2e-6;
    double emax = 0.0, s_at = 0.0;
    for (const auto& pt : ray.pts)
      if (pt[0] > emax) {
        emax = pt[0];
        s_at = pt[1];
      }
    if (i < 3) {
      CHECK_FALSE(returned);
    } else {
      CHECK(returned);
      CHECK(s_at == Catch::Approx(h::curve_sigma2(emax)).epsilon(0.01));
    }
  }
}

TEST_CASE("each case-4 region matches the ODE oracle at eps = 0.05") {
  // one desk-scale point per Figure-2 region (sigma as small as runtime
  // permits, per the module invariant); log-density tolerance 5%
  const double eps = 0.05;
  struct Pt {
    double eta, sigma;
  };
  const Pt pts[] = {{4.41, 0.126}, {2.0, 0.3}, {0.64, 0.35}};
  const RegimeCase want[] = {RegimeCase::c4a, RegimeCase::c4b, RegimeCase::c4c};
  for (int i = 0; i < 3; ++i) {
    const double eta = pts[i].eta, sigma = pts[i].sigma;
    REQUIRE(h::ht_region_classify(eta, sigma).regime == want[i]);
    const int n = static_cast<int>(std::lround(eta / (eps * eps)));
    const double t = sigma / (eps * eps * eps);
    const double l4 = h::ht_case4_log_density(eps, eta, sigma);
    const double lode = std::log(ode_value(0.95, n, t, 0.128));
    CAPTURE(eta, sigma);
    CHECK(std::abs(l4 - lode) / std::abs(lode) < 0.05);
  }
}

TEST_CASE("ht case 3 log-density within 5% of the ODE at eps = 0.05") {
  const double eps = 0.05;
  const double lode = std::log(ode_value(0.95, 40, 60.0, 0.1));
  const double l3 = std::log(h::ht_case3_density(eps, 2.0, 3.0));
  CHECK(std::abs(l3 - lode) / std::abs(lode) < 0.05);
}
