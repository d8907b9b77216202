#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "psq/specfun.hpp"
#include "psq/transform.hpp"

using namespace psq;
namespace tr = psq::transform;
namespace sf = psq::specfun;

TEST_CASE("spectral point closed forms at theta = 0") {
  auto p = validate_params(0.5);
  auto sp = tr::spectral_point(p, 0.0);
  CHECK(sp.z_minus == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(sp.z_plus == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(sp.alpha == Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("spectral point at rho=0.5, theta=0.5") {
  auto p = validate_params(0.5);
  auto sp = tr::spectral_point(p, 0.5);
  CHECK(sp.z_plus == Catch::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sp.z_minus == Catch::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sp.alpha ==
        Catch::Approx((2.0 + std::sqrt(2.0)) / (2.0 * std::sqrt(2.0)))
            .epsilon(1e-14));
}

TEST_CASE("spectral point root identities across the domain") {
  for (double rho : {0.3, 0.5, 0.8}) {
    auto p = validate_params(rho);
    const double tc = tr::branch_point(p);
    for (double theta : {tc * 0.9, -0.01, 0.0, 0.3, 1.0, 5.0}) {
      auto sp = tr::spectral_point(p, theta);
      CHECK(rho * sp.z_plus * sp.z_minus == Catch::Approx(1.0).epsilon(1e-12));
      CHECK(sp.z_plus + sp.z_minus ==
            Catch::Approx((1.0 + rho + theta) / rho).epsilon(1e-12));
      CHECK(sp.z_plus > sp.z_minus);
      CHECK(sp.z_minus > 0.0);
      CHECK(sp.alpha > 1.0);
    }
    CHECK_THROWS_AS(tr::spectral_point(p, tc), DomainError);
    CHECK_THROWS_AS(tr::spectral_point(p, tc - 0.01), DomainError);
  }
}

TEST_CASE("G_n is positive and decreasing in n for theta > 0") {
  auto p = validate_params(0.5);
  double prev = tr::g_n(p, 0.5, 0);
  CHECK(prev > 0.0);
  for (int n = 1; n <= 8; ++n) {
    const double cur = tr::g_n(p, 0.5, n);
    CHECK(cur > 0.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(tr::g_n(p, 0.0, 1), DomainError);
  CHECK_THROWS_AS(tr::g_n(p, -0.1, 1), DomainError);
}

TEST_CASE("G_n homogeneous recurrence residual") {
  auto p = validate_params(0.5);
  const double theta = 0.7;
  const int n = 5;
  const double gm = tr::g_n(p, theta, n - 1);
  const double g0 = tr::g_n(p, theta, n);
  const double gp = tr::g_n(p, theta, n + 1);
  const double resid = (n + 1.0) * p.rho() * gp -
                       (n + 1.0) * (1.0 + p.rho() + theta) * g0 + n * gm;
  CHECK(std::abs(resid) <= 1e-9 * std::abs(g0));
}

TEST_CASE("G_n large-n asymptote ratio") {
  auto p = validate_params(0.5);
  const double theta = 0.5;
  const int n = 200;
  auto sp = tr::spectral_point(p, theta);
  const double asym = std::exp(sf::log_gamma(sp.alpha) -
                               sp.alpha * std::log(static_cast<double>(n)) +
                               (sp.alpha + n) * std::log(sp.z_minus) -
                               sp.alpha * std::log(sp.z_plus - sp.z_minus));
  CHECK(tr::g_n(p, theta, n) / asym == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("H_n base cases") {
  auto p = validate_params(0.5);
  CHECK(tr::h_n(p, 0.7, 0) == 1.0);
  for (double theta : {0.2, 0.9}) {
    CHECK(tr::h_n(p, theta, 1) ==
          Catch::Approx((1.0 + p.rho() + theta) / p.rho()).epsilon(1e-13));
  }
}

TEST_CASE("H_n growth asymptote ratio") {
  auto p = validate_params(0.5);
  const double theta = 0.5;
  const int n = 200;
  auto sp = tr::spectral_point(p, theta);
  const double asym =
      std::exp((sp.alpha - 1.0) * std::log(static_cast<double>(n)) -
               sf::log_gamma(sp.alpha) +
               (n + 1.0 - sp.alpha) * std::log(sp.z_plus) +
               (sp.alpha - 1.0) * std::log(sp.z_plus - sp.z_minus));
  CHECK(tr::h_n(p, theta, n) / asym == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("H_n satisfies the homogeneous recurrence") {
  for (double rho : {0.3, 0.5, 0.8}) {
    auto p = validate_params(rho);
    for (double theta : {0.1, 0.5, 2.0}) {
      for (int n : {1, 4, 9}) {
        const double hm = tr::h_n(p, theta, n - 1);
        const double h0 = tr::h_n(p, theta, n);
        const double hp = tr::h_n(p, theta, n + 1);
        const double resid = (n + 1.0) * rho * hp -
                             (n + 1.0) * (1.0 + rho + theta) * h0 + n * hm;
        CHECK(std::abs(resid) <= 1e-9 * std::abs(hp) * (n + 1.0) * rho);
      }
    }
  }
}

TEST_CASE("discrete Wronskian identity") {
  auto p5 = validate_params(0.5);
  CHECK(tr::wronskian_check(p5, 0.5, 0) <= 1e-9);
  auto p3 = validate_params(0.3);
  CHECK(tr::wronskian_check(p3, 1.0, 7) <= 1e-9);
}

TEST_CASE("Wronskian residual small across l, theta, rho") {
  for (double rho : {0.3, 0.5, 0.8}) {
    auto p = validate_params(rho);
    for (double theta : {0.1, 0.5, 2.0}) {
      for (int l = 0; l <= 10; l += 2) {
        CAPTURE(rho, theta, l);
        CHECK(tr::wronskian_check(p, theta, l) <= 1e-9);
      }
    }
  }
}

TEST_CASE("phat tends to 1 as theta -> 0+") {
  auto p = validate_params(0.5);
  for (int n : {0, 3}) {
    // linear extrapolation in theta from two small arguments
    const double t1 = 1e-4, t2 = 5e-5;
    const double v1 = tr::phat(p, t1, n), v2 = tr::phat(p, t2, n);
    const double at_zero = v2 + (v2 - v1) * t2 / (t1 - t2);
    CHECK(at_zero == Catch::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("phat satisfies the inhomogeneous transformed recurrence") {
  auto p = validate_params(0.5);
  const double theta = 0.7;
  const int n = 3;
  const double resid =
      (n + 1.0) * p.rho() * tr::phat(p, theta, n + 1) -
      (n + 1.0) * (1.0 + p.rho() + theta) * tr::phat(p, theta, n) +
      n * tr::phat(p, theta, n - 1) + 1.0;
  CHECK(std::abs(resid) <= 1e-8);
}

TEST_CASE("phat is decreasing in theta (complete monotonicity spot check)") {
  auto p = validate_params(0.5);
  for (int n : {0, 2, 6}) {
    double prev = tr::phat(p, 0.25, n);
    for (double theta : {0.5, 1.0, 2.0, 4.0}) {
      const double cur = tr::phat(p, theta, n);
      CHECK(cur < prev);
      CHECK(cur > 0.0);
      prev = cur;
    }
  }
}

TEST_CASE("closed-form sum of rho^l H_l against partial sums") {
  auto p = validate_params(0.5);
  const double theta = -0.05;
  const double closed = tr::sum_rho_h_closed(p, theta);
  // brute-force partial sums with L picked by the geometric tail ratio
  auto sp = tr::spectral_point(p, theta);
  const double ratio = p.rho() * sp.z_plus;
  REQUIRE(ratio < 1.0);
  const int L =
      static_cast<int>(std::ceil(std::log(1e-12) / std::log(ratio))) + 10;
  double direct = 0.0, rl = 1.0;
  for (int l = 0; l <= L; ++l) {
    direct += rl * tr::h_n(p, theta, l);
    rl *= p.rho();
  }
  CHECK(closed == Catch::Approx(direct).epsilon(1e-8));
  CHECK(closed > 0.0);
}

TEST_CASE("closed-form sum diverges toward theta = 0-") {
  auto p = validate_params(0.5);
  CHECK(tr::sum_rho_h_closed(p, -1e-7) > tr::sum_rho_h_closed(p, -1e-3));
  CHECK(tr::sum_rho_h_closed(p, -1e-7) > 1e4);
  CHECK_THROWS_AS(tr::sum_rho_h_closed(p, 0.0), DomainError);
  CHECK_THROWS_AS(tr::sum_rho_h_closed(p, 0.1), DomainError);
  CHECK_THROWS_AS(tr::sum_rho_h_closed(p, tr::branch_point(p)), DomainError);
}

TEST_CASE("positivity of the closed-form sum across the window") {
  auto p = validate_params(0.5);
  const double tc = tr::branch_point(p);
  for (double f : {0.9, 0.5, 0.1, 0.01})
    CHECK(tr::sum_rho_h_closed(p, tc * f) > 0.0);
}
