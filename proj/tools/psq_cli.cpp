// Command-line interface: density computation, method comparison, regime
// maps, ray tracing, simulation, and transform-domain consistency checks.
// CSV output carries '#'-prefixed config-echo lines before the header so any
// result file reproduces its own run.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psq/asymptotics.hpp"
#include "psq/core.hpp"
#include "psq/exact.hpp"
#include "psq/heavytraffic.hpp"
#include "psq/oracles.hpp"
#include "psq/specfun.hpp"
#include "psq/transform.hpp"

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Output {
  std::unique_ptr<std::ofstream> file;
  std::ostream& stream() { return file ? *file : std::cout; }
  void open(const std::string& path) {
    if (path.empty()) return;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw psq::DomainError("cannot open output file " + path);
  }
};

struct GridSpec {
  double rho = -1.0, epsilon = -1.0;
  int n = -1, n_from = -1, n_to = -1;
  double t = -1.0, t_from = 0.0, t_to = -1.0, t_step = 1.0;

  double resolve_rho() const {
    const bool has_r = rho >= 0.0, has_e = epsilon >= 0.0;
    if (has_r == has_e)
      throw psq::DomainError("exactly one of --rho/--epsilon is required");
    return has_r ? rho : 1.0 - epsilon;
  }
  std::vector<int> n_values() const {
    if (n >= 0) return {n};
    if (n_from < 0 || n_to < n_from)
      throw psq::DomainError("give --n or a well-formed --n-from/--n-to range");
    std::vector<int> out;
    for (int k = n_from; k <= n_to; ++k) out.push_back(k);
    return out;
  }
  std::vector<double> t_values() const {
    if (t >= 0.0) return {t};
    if (t_to < t_from || t_step <= 0.0)
      throw psq::DomainError(
          "give --t or a well-formed --t-from/--t-to/--t-step grid");
    std::vector<double> out;
    for (double x = t_from; x <= t_to + 1e-12 * t_step; x += t_step)
      out.push_back(x);
    return out;
  }
};

void add_grid_options(CLI::App* cmd, GridSpec& g) {
  cmd->add_option("--rho", g.rho, "traffic intensity in (0,1)");
  cmd->add_option("--epsilon", g.epsilon, "heavy-traffic 1-rho in (0,1)");
  cmd->add_option("--n", g.n, "customer count");
  cmd->add_option("--n-from", g.n_from);
  cmd->add_option("--n-to", g.n_to);
  cmd->add_option("--t", g.t, "time point");
  cmd->add_option("--t-from", g.t_from);
  cmd->add_option("--t-to", g.t_to);
  cmd->add_option("--t-step", g.t_step);
}

// one density-evaluation dispatcher shared by density/compare; caches the
// Pollaczek grid and whole-column ODE sweeps across grid points
class MethodEval {
 public:
  MethodEval(std::string name, double rho) : name_(std::move(name)), rho_(rho) {}

  double operator()(int n, double t) {
    using namespace psq;
    auto params = [&] { return validate_params(rho_); };
    if (name_ == "exact") {
      if (!pollaczek_)
        pollaczek_ = std::make_unique<exact::PollaczekEvaluator>(rho_);
      return pollaczek_->density(n, t);
    }
    if (name_ == "ode") {
      if (n > ode_nmax_) throw DomainError("ode method capped at n <= 512");
      auto it = ode_cache_.find(t);
      if (it == ode_cache_.end()) {
        oracle::OdeConfig cfg;
        cfg.certify = false;
        cfg.dt_max = 0.05;
        auto curves = oracle::ode_density(params(), ode_nmax_, {t}, cfg);
        std::vector<double> col(ode_nmax_ + 1);
        for (int k = 0; k <= ode_nmax_; ++k) col[k] = curves[k].values[0];
        it = ode_cache_.emplace(t, std::move(col)).first;
      }
      return it->second[n];
    }
    if (name_ == "asym") {
      auto lab = asym::regime_classify(params(), n, t);
      switch (lab.regime) {
        case RegimeCase::c1: return asym::case1_density(params(), n, t);
        case RegimeCase::c2: return asym::case2_density(params(), n, t);
        case RegimeCase::c3: return asym::case3_density(params(), n, t);
        case RegimeCase::c5: return asym::case5_density(params(), n, t);
        default: return asym::case4_density(params(), n, t);
      }
    }
    if (name_ == "case1") return asym::case1_density(params(), n, t);
    if (name_ == "case2") return asym::case2_density(params(), n, t);
    if (name_ == "case3") return asym::case3_density(params(), n, t);
    if (name_ == "case4") return asym::case4_density(params(), n, t);
    if (name_ == "case5") return asym::case5_density(params(), n, t);
    const double eps = 1.0 - rho_;
    if (name_ == "ht1") return ht::ht_case1_density(n, t);
    if (name_ == "ht2") return ht::ht_case2_density(eps, n, eps * eps * eps * t);
    if (name_ == "ht3") return ht::ht_case3_density(eps, eps * n, eps * t);
    if (name_ == "ht4")
      return ht::ht_case4_density(eps, eps * eps * n, eps * eps * eps * t);
    throw psq::DomainError("unknown method '" + name_ + "'");
  }

 private:
  std::string name_;
  double rho_;
  static constexpr int ode_nmax_ = 512;
  std::unique_ptr<psq::exact::PollaczekEvaluator> pollaczek_;
  std::map<double, std::vector<double>> ode_cache_;
};

int run_density(const GridSpec& g, const std::string& method,
                const std::string& out_path, const std::string& format) {
  const double rho = g.resolve_rho();
  Output out;
  out.open(out_path);
  auto& os = out.stream();
  MethodEval eval(method, rho);
  const auto ns = g.n_values();
  const auto ts = g.t_values();
  if (format == "json") {
    json rows = json::array();
    for (int n : ns)
      for (double t : ts)
        rows.push_back(
            {{"n", n}, {"t", t}, {"value", eval(n, t)}, {"method", method}});
    json doc{{"config",
              {{"command", "density"}, {"rho", rho}, {"method", method}}},
             {"results", rows}};
    os << doc.dump(2) << "\n";
    return 0;
  }
  os << "# psq density\n# rho=" << fmt(rho) << "\n# method=" << method << "\n";
  os << "n,t,value,method\n";
  for (int n : ns)
    for (double t : ts)
      os << n << "," << fmt(t) << "," << fmt(eval(n, t)) << "," << method
         << "\n";
  return 0;
}

int run_compare(const GridSpec& g, std::vector<std::string> methods,
                const std::string& out_path) {
  if (methods.size() < 2)
    throw psq::DomainError("compare needs at least two --methods");
  const double rho = g.resolve_rho();
  Output out;
  out.open(out_path);
  auto& os = out.stream();
  auto params = psq::validate_params(rho);

  std::vector<MethodEval> evals;
  for (const auto& m : methods) evals.emplace_back(m, rho);

  os << "# psq compare\n# rho=" << fmt(rho) << "\n# methods=";
  for (std::size_t i = 0; i < methods.size(); ++i)
    os << (i ? "," : "") << methods[i];
  os << "\n";
  os << "n,t";
  for (const auto& m : methods) os << "," << m;
  for (std::size_t i = 0; i < methods.size(); ++i)
    for (std::size_t j = i + 1; j < methods.size(); ++j)
      os << ",absdiff_" << methods[i] << "_" << methods[j] << ",reldiff_"
         << methods[i] << "_" << methods[j];
  os << ",regime\n";

  for (int n : g.n_values()) {
    for (double t : g.t_values()) {
      std::vector<double> vals;
      for (auto& e : evals) vals.push_back(e(n, t));
      os << n << "," << fmt(t);
      for (double v : vals) os << "," << fmt(v);
      for (std::size_t i = 0; i < vals.size(); ++i)
        for (std::size_t j = i + 1; j < vals.size(); ++j) {
          const double ad = std::abs(vals[i] - vals[j]);
          const double scale = std::max(std::abs(vals[i]), std::abs(vals[j]));
          os << "," << fmt(ad) << "," << fmt(scale > 0.0 ? ad / scale : 0.0);
        }
      std::string regime = "-";
      if (t > 0.0)
        regime = to_string(psq::asym::regime_classify(params, n, t).regime);
      os << "," << regime << "\n";
    }
  }
  return 0;
}

int run_regions(const std::string& plane, double rho, int rays, double x_max,
                double y_max, const std::string& out_path) {
  Output out;
  out.open(out_path);
  auto& os = out.stream();
  psq::asym::RayFan fan;
  if (plane == "rho") {
    auto params = psq::validate_params(rho);
    fan = psq::asym::trace_rays(params, 3, rays, x_max > 0.0 ? x_max : 10.0,
                                y_max > 0.0 ? y_max : 12.0);
    os << "# psq regions\n# plane=rho\n# rho=" << fmt(rho) << "\n";
    os << "# columns: x=T, y=Y\n";
  } else if (plane == "heavy") {
    fan = psq::ht::ht_trace_rays(3, rays, y_max > 0.0 ? y_max : 12.0,
                                 x_max > 0.0 ? x_max : 16.0);
    os << "# psq regions\n# plane=heavy\n";
    os << "# columns: x=eta, y=sigma\n";
  } else {
    throw psq::DomainError("--plane must be rho or heavy");
  }
  os << "curve_id,x,y\n";
  auto emit = [&](const psq::asym::Polyline& line) {
    for (const auto& pt : line.pts)
      os << line.id << "," << fmt(pt[0]) << "," << fmt(pt[1]) << "\n";
  };
  for (const auto& r : fan.rays) emit(r);
  emit(fan.curve_dashed);
  emit(fan.curve_dotted);
  return 0;
}

int run_simulate(double rho, int n, bool unconditional, std::uint64_t samples,
                 std::uint64_t seed, const std::string& out_path) {
  auto params = psq::validate_params(rho);
  psq::oracle::SimEstimate est =
      unconditional ? psq::oracle::simulate_unconditional(params, samples, seed)
                    : psq::oracle::simulate_sojourn(params, n, samples, seed);
  json doc{{"config",
            {{"command", "simulate"},
             {"rho", rho},
             {"n", unconditional ? json(nullptr) : json(n)},
             {"unconditional", unconditional},
             {"samples", samples},
             {"seed", seed}}},
           {"results",
            {{"samples", est.samples},
             {"seed", est.seed},
             {"mean", est.mean},
             {"stderr", est.stderr_mean},
             {"histogram",
              {{"edges", est.hist_edges}, {"masses", est.hist_mass}}}}}};
  Output out;
  out.open(out_path);
  out.stream() << doc.dump(2) << "\n";
  return 0;
}

int run_transform_check(double rho, std::vector<double> thetas,
                        std::vector<int> ns, const std::string& out_path) {
  using namespace psq;
  auto params = validate_params(rho);
  if (thetas.empty()) thetas = {0.5, 1.0, 2.0};
  if (ns.empty()) ns = {0, 1, 5};
  Output out;
  out.open(out_path);
  auto& os = out.stream();
  os << "# psq transform-check\n# rho=" << fmt(rho) << "\n";
  os << "check,n,theta,value,reference,residual\n";
  bool ok = true;
  auto row = [&](const std::string& name, const std::string& n,
                 const std::string& th, double v, double ref, double resid,
                 double tol) {
    os << name << "," << n << "," << th << "," << fmt(v) << "," << fmt(ref)
       << "," << fmt(resid) << "\n";
    if (!(resid <= tol)) ok = false;
  };

  for (double th : thetas) {
    auto sp = transform::spectral_point(params, th);
    row("rho_zp_zm", "-", fmt(th), rho * sp.z_plus * sp.z_minus, 1.0,
        std::abs(rho * sp.z_plus * sp.z_minus - 1.0), 1e-12);
    row("wronskian", "0", fmt(th), 0.0, 0.0,
        transform::wronskian_check(params, th, 0), 1e-9);
  }
  {
    const double th = -0.2 * (1.0 - std::sqrt(rho)) * (1.0 - std::sqrt(rho));
    const double closed = transform::sum_rho_h_closed(params, th);
    double direct = 0.0, rl = 1.0;
    for (int l = 0; l <= 4000; ++l) {
      const double term = rl * transform::h_n(params, th, l);
      direct += term;
      rl *= rho;
      if (l > 20 && term < 1e-14 * direct) break;
    }
    row("closed_sum", "-", fmt(th), closed, direct,
        std::abs(closed - direct) / std::abs(direct), 1e-8);
  }
  row("contour_const", "0", "-", asym::contour_series_constant(0),
      std::exp(1.0),
      std::abs(asym::contour_series_constant(0) - std::exp(1.0)) /
          std::exp(1.0),
      1e-12);

  // Laplace transform of the ODE curve against phat
  {
    const double T = 45.0;
    const int m = 2000;
    std::vector<double> grid(m + 1);
    for (int i = 0; i <= m; ++i) grid[i] = T * i / m;
    oracle::OdeConfig cfg;
    cfg.certify = false;
    cfg.dt_max = 0.02;
    const int nmax = *std::max_element(ns.begin(), ns.end());
    auto curves = oracle::ode_density(params, nmax, grid, cfg);
    for (int n : ns) {
      const auto& v = curves[n].values;
      for (double th : thetas) {
        double simpson = v[0] + v[m] * std::exp(-th * T);
        for (int i = 1; i < m; ++i)
          simpson += (i % 2 ? 4.0 : 2.0) * v[i] * std::exp(-th * grid[i]);
        simpson *= (T / m) / 3.0;
        const double ph = transform::phat(params, th, n);
        row("laplace", std::to_string(n), fmt(th), simpson, ph,
            std::abs(simpson - ph) / ph, 1e-5);
      }
    }
  }
  if (!ok) throw ConvergenceError("transform-check: residual above tolerance");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional sojourn-time densities of the M/M/1-PS queue"};
  app.require_subcommand(1);

  GridSpec g;
  std::string method = "exact", out_path, format = "csv";
  auto* density = app.add_subcommand("density", "evaluate p_n(t)");
  add_grid_options(density, g);
  density->add_option("--method", method,
                      "exact|ode|asym|case1..case5|ht1..ht4");
  density->add_option("--output", out_path);
  density->add_option("--format", format)
      ->check(CLI::IsMember({"csv", "json"}));

  GridSpec gc;
  std::vector<std::string> methods;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "evaluate several methods");
  add_grid_options(compare, gc);
  compare->add_option("--methods", methods)->delimiter(',');
  compare->add_option("--output", cmp_out);

  std::string plane = "rho", reg_out;
  double reg_rho = 0.5, reg_xmax = -1.0, reg_ymax = -1.0;
  int rays = 8;
  auto* regions = app.add_subcommand("regions", "rays and transition curves");
  regions->add_option("--plane", plane)->check(CLI::IsMember({"rho", "heavy"}));
  regions->add_option("--rho", reg_rho);
  regions->add_option("--rays", rays);
  regions->add_option("--x-max", reg_xmax, "T (rho plane) or eta (heavy)");
  regions->add_option("--y-max", reg_ymax, "Y (rho plane) or sigma (heavy)");
  regions->add_option("--output", reg_out);

  double sim_rho = 0.5;
  int sim_n = 0;
  bool sim_unc = false;
  std::uint64_t sim_samples = 100000, sim_seed = 1;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo sojourn times");
  simulate->add_option("--rho", sim_rho);
  simulate->add_option("--n", sim_n);
  simulate->add_flag("--unconditional", sim_unc);
  simulate->add_option("--samples", sim_samples);
  simulate->add_option("--seed", sim_seed);
  simulate->add_option("--output", sim_out);

  double tc_rho = 0.5;
  std::vector<double> tc_thetas;
  std::vector<int> tc_ns;
  std::string tc_out;
  auto* tcheck = app.add_subcommand("transform-check",
                                    "transform-domain consistency checks");
  tcheck->add_option("--rho", tc_rho);
  tcheck->add_option("--theta", tc_thetas)->delimiter(',');
  tcheck->add_option("--n", tc_ns)->delimiter(',');
  tcheck->add_option("--output", tc_out);

  try {
    app.parse(argc, argv);
    if (*density) return run_density(g, method, out_path, format);
    if (*compare) return run_compare(gc, methods, cmp_out);
    if (*regions)
      return run_regions(plane, reg_rho, rays, reg_xmax, reg_ymax, reg_out);
    if (*simulate) {
      if (sim_samples < 1)
        throw psq::DomainError("simulate: --samples must be >= 1");
      return run_simulate(sim_rho, sim_n, sim_unc, sim_samples, sim_seed,
                          sim_out);
    }
    if (*tcheck) return run_transform_check(tc_rho, tc_thetas, tc_ns, tc_out);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help path
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const psq::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const psq::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const psq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
