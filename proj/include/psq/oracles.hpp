#pragma once

// Ground-truth generators independent of the analytic machinery: truncated
// Kolmogorov-forward integration of the sojourn recurrence, an event-driven
// Monte Carlo simulator of the tagged customer, and ODE-based moments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "psq/core.hpp"
#include "psq/errors.hpp"

namespace psq::oracle {

enum class Closure { zero, copy };

struct OdeConfig {
  int n_truncate = 0;        // 0 = auto: n_max + 20 + ceil(margin (1+rho) T)
  double dt_max = 0.0;       // 0 = auto: 0.25/(1+rho)
  double tolerance = 1e-8;   // certification threshold
  Closure closure = Closure::zero;
  double margin_factor = 4.0;
  bool certify = true;       // rerun with doubled n_truncate and compare
};

namespace detail {

// One RK4 sweep of p'_n = rho p_{n+1} - (1+rho) p_n + n/(n+1) p_{n-1},
// p_n(0) = 1/(n+1), sampled at the (sorted, >=0) time grid. Returns a matrix
// indexed [grid point][n] for n = 0..n_keep.
inline std::vector<std::vector<double>> ode_sweep(double rho, int n_keep,
                                                  const std::vector<double>& grid,
                                                  int n_trunc, double dt_max,
                                                  Closure closure) {
  const int N = n_trunc;
  std::vector<double> y(N + 1), k1(N + 1), k2(N + 1), k3(N + 1), k4(N + 1),
      tmp(N + 1);
  for (int i = 0; i <= N; ++i) y[i] = 1.0 / (i + 1.0);

  const double om = 1.0 + rho;
  auto rhs = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int i = 0; i <= N; ++i) out[i] = -om * v[i];
    for (int i = 0; i < N; ++i) out[i] += rho * v[i + 1];
    if (closure == Closure::copy) out[N] += rho * v[N];
    for (int i = 1; i <= N; ++i) out[i] += (i / (i + 1.0)) * v[i - 1];
  };
  auto axpy = [&](const std::vector<double>& v, double h,
                  const std::vector<double>& k, std::vector<double>& out) {
    for (int i = 0; i <= N; ++i) out[i] = v[i] + h * k[i];
  };

  std::vector<std::vector<double>> snaps;
  snaps.reserve(grid.size());
  double t = 0.0;
  for (double target : grid) {
    const double span = target - t;
    if (span > 0.0) {
      const int steps = static_cast<int>(std::ceil(span / dt_max));
      const double h = span / steps;
      for (int s = 0; s < steps; ++s) {
        rhs(y, k1);
        axpy(y, 0.5 * h, k1, tmp);
        rhs(tmp, k2);
        axpy(y, 0.5 * h, k2, tmp);
        rhs(tmp, k3);
        axpy(y, h, k3, tmp);
        rhs(tmp, k4);
        for (int i = 0; i <= N; ++i)
          y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      t = target;
    }
    snaps.emplace_back(y.begin(), y.begin() + n_keep + 1);
  }
  return snaps;
}

}  // namespace detail

// All curves p_0..p_{n_max} on t_grid in one sweep, certified by a run with
// doubled truncation unless config.certify is off.
inline std::vector<DensityCurve> ode_density(const QueueParams& p, int n_max,
                                             const std::vector<double>& t_grid,
                                             OdeConfig cfg = {}) {
  if (n_max < 0) throw DomainError("ode_density: n_max must be >= 0");
  if (t_grid.empty()) throw DomainError("ode_density: empty time grid");
  std::vector<double> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  if (grid.front() < 0.0) throw DomainError("ode_density: negative time");
  const double rho = p.rho();
  const double T = grid.back();
  const double dt = cfg.dt_max > 0.0
                        ? std::min(cfg.dt_max, 0.25 / (1.0 + rho))
                        : 0.25 / (1.0 + rho);
  int N = cfg.n_truncate > 0
              ? cfg.n_truncate
              : n_max + 20 +
                    static_cast<int>(std::ceil(cfg.margin_factor * (1.0 + rho) * T));
  if (N <= n_max) throw DomainError("ode_density: n_truncate <= n_max");

  auto snaps = detail::ode_sweep(rho, n_max, grid, N, dt, cfg.closure);
  if (cfg.certify) {
    auto check = detail::ode_sweep(rho, n_max, grid, 2 * N, dt, cfg.closure);
    for (std::size_t g = 0; g < grid.size(); ++g)
      for (int n = 0; n <= n_max; ++n)
        if (std::abs(snaps[g][n] - check[g][n]) > cfg.tolerance)
          throw ConvergenceError(
              "ode_density: truncation not converged at n=" + std::to_string(n) +
              " t=" + std::to_string(grid[g]));
    snaps = std::move(check);
  }

  std::vector<DensityCurve> out;
  out.reserve(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    std::vector<double> vals(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) vals[g] = snaps[g][n];
    out.emplace_back(n, grid, std::move(vals), Method::ode);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct SimEstimate {
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::vector<double> hist_edges;   // size bins+1
  std::vector<double> hist_mass;    // size bins, sums to 1
};

namespace detail {

// SplitMix64 (Steele, Lea, Flood 2014), used to derive per-block streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ (Blackman, Vigna 2019); state seeded via SplitMix64.
struct Xoshiro256pp {
  std::uint64_t s[4];
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s) w = splitmix64(sm);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
  // uniform in (0,1) using the top 53 bits, never exactly 0
  double uniform() {
    return ((next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
};

// N ~ Geometric(1-rho) on {0,1,...}: P[N=k] = (1-rho) rho^k
inline std::uint64_t geometric_from_uniform(double rho, double u) {
  return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log(rho)));
}

inline SimEstimate finalize(std::vector<double>& samples, std::uint64_t seed,
                            int bins) {
  SimEstimate est;
  est.samples = samples.size();
  est.seed = seed;
  double sum = 0.0;
  for (double v : samples) sum += v;
  est.mean = sum / samples.size();
  double ss = 0.0;
  for (double v : samples) ss += (v - est.mean) * (v - est.mean);
  const double sd = std::sqrt(ss / (samples.size() - 1.0));
  est.stderr_mean = sd / std::sqrt(static_cast<double>(samples.size()));
  const double top = *std::max_element(samples.begin(), samples.end());
  const double width = top / bins;
  est.hist_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) est.hist_edges[b] = b * width;
  std::vector<std::uint64_t> counts(bins, 0);
  for (double v : samples) {
    int b = static_cast<int>(v / width);
    if (b >= bins) b = bins - 1;
    ++counts[b];
  }
  est.hist_mass.resize(bins);
  for (int b = 0; b < bins; ++b)
    est.hist_mass[b] = static_cast<double>(counts[b]) / samples.size();
  return est;
}

}  // namespace detail

// Sojourn time of a tagged customer arriving to n others. State k counts all
// customers including the tagged one; arrivals at rate rho, departures at
// total rate 1 with the departing customer uniform over k (memorylessness
// makes per-customer remaining work irrelevant). Deterministic given seed.
inline SimEstimate simulate_sojourn(const QueueParams& p, int n,
                                    std::uint64_t samples, std::uint64_t seed,
                                    int bins = 400) {
  p.require_stationary("simulate_sojourn");
  if (n < 0) throw DomainError("simulate_sojourn: n must be >= 0");
  if (samples < 1) throw DomainError("simulate_sojourn: samples must be >= 1");
  const double rho = p.rho();
  const double total_rate = rho + 1.0;
  const double p_arrival = rho / total_rate;
  constexpr std::uint64_t kBlock = 65536;
  constexpr std::uint64_t kEventCap = 10000000;

  std::vector<double> draws;
  draws.reserve(samples);
  std::uint64_t base = seed;
  for (std::uint64_t i = 0; i < samples; ++i) {
    if (i % kBlock == 0) {
      std::uint64_t mix = seed + 0x632be59bd9b4e019ULL * (i / kBlock + 1);
      base = detail::splitmix64(mix);
    }
    detail::Xoshiro256pp rng(base + i % kBlock);
    std::uint64_t k = static_cast<std::uint64_t>(n) + 1;
    double t = 0.0;
    for (std::uint64_t ev = 0;; ++ev) {
      if (ev > kEventCap)
        throw ConvergenceError("simulate_sojourn: event cap exceeded");
      t += rng.exponential(total_rate);
      if (rng.uniform() < p_arrival) {
        ++k;
      } else {
        if (rng.uniform() * k < 1.0) break;  // tagged departs
        --k;
      }
    }
    draws.push_back(t);
  }
  return detail::finalize(draws, seed, bins);
}

// Unconditional sojourn: draw N ~ Geometric(1-rho) (P[N=k] = (1-rho) rho^k),
// then simulate the tagged customer against N others.
inline SimEstimate simulate_unconditional(const QueueParams& p,
                                          std::uint64_t samples,
                                          std::uint64_t seed, int bins = 400) {
  p.require_stationary("simulate_unconditional");
  if (samples < 1)
    throw DomainError("simulate_unconditional: samples must be >= 1");
  const double rho = p.rho();
  const double total_rate = rho + 1.0;
  const double p_arrival = rho / total_rate;
  constexpr std::uint64_t kBlock = 65536;
  constexpr std::uint64_t kEventCap = 10000000;

  std::vector<double> draws;
  draws.reserve(samples);
  std::uint64_t base = seed;
  for (std::uint64_t i = 0; i < samples; ++i) {
    if (i % kBlock == 0) {
      std::uint64_t mix = seed + 0x632be59bd9b4e019ULL * (i / kBlock + 1);
      base = detail::splitmix64(mix);
    }
    detail::Xoshiro256pp rng(base + i % kBlock);
    const std::uint64_t n0 = detail::geometric_from_uniform(rho, rng.uniform());
    std::uint64_t k = n0 + 1;
    double t = 0.0;
    for (std::uint64_t ev = 0;; ++ev) {
      if (ev > kEventCap)
        throw ConvergenceError("simulate_unconditional: event cap exceeded");
      t += rng.exponential(total_rate);
      if (rng.uniform() < p_arrival) {
        ++k;
      } else {
        if (rng.uniform() * k < 1.0) break;
        --k;
      }
    }
    draws.push_back(t);
  }
  return detail::finalize(draws, seed, bins);
}

// k-th moment of p_n via the ODE sweep plus exponential tail completion at a
// locally fitted rate (the asymptotic rate (1-sqrt rho)^2 as fallback).
inline double moment(const QueueParams& p, int n, int k) {
  p.require_stationary("moment");
  if (k < 1 || k > 2) throw DomainError("moment: k must be 1 or 2");
  const double rho = p.rho();
  const double sr = std::sqrt(rho);
  const double alpha = (1.0 - sr) * (1.0 - sr);
  const double scale = (n + 1.0) / (1.0 - rho);
  const double T = (20.0 + k * std::log(std::max(3.0, scale))) / alpha;

  auto integral_to = [&](double horizon) {
    const double dt = 0.05;
    const int m = static_cast<int>(std::ceil(horizon / dt));
    std::vector<double> grid(m + 1);
    for (int i = 0; i <= m; ++i) grid[i] = horizon * i / m;
    OdeConfig cfg;
    cfg.certify = false;
    auto curves = ode_density(p, n, grid, cfg);
    const auto& v = curves[n].values;
    const double h = grid[1] - grid[0];
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double t0 = grid[i], t1 = grid[i + 1];
      acc += 0.5 * h * (std::pow(t0, k) * v[i] + std::pow(t1, k) * v[i + 1]);
    }
    // fitted tail rate over the last 5% of the horizon
    const int back = std::max(2, m / 20);
    double lam = alpha;
    if (v[m] > 0.0 && v[m - back] > 0.0) {
      const double fit = std::log(v[m - back] / v[m]) / (back * h);
      if (fit > 0.0) lam = fit;
    }
    const double tk = std::pow(horizon, k);
    double tail = tk / lam;
    if (k >= 1) tail += k * std::pow(horizon, k - 1) / (lam * lam);
    if (k == 2) tail += 2.0 / (lam * lam * lam);
    return acc + v[m] * tail;
  };

  const double a = integral_to(T);
  const double b = integral_to(1.3 * T);
  if (std::abs(a - b) > 1e-5 * std::abs(b) + 1e-12)
    throw ConvergenceError("moment: tail completion did not certify");
  return b;
}

}  // namespace psq::oracle
