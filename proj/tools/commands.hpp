// Copyright 2026 The cgpo-kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "cgpo/cgpo.hpp"
#include "cgpo/io.hpp"

// Subcommand bodies for the cgpo-kit runner. Each takes the parsed config
// and returns the JSON report plus the process exit code:
//   0  success / positive verdict
//   2  negative verdict (infeasible, check failed)
//   1  error (schema violation, budget exceeded, ...)

namespace cgpo::cli {

using io::json;

inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kNegative = 2;

struct RunOptions {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;  // empty: no files written
};

struct CommandResult {
  json report;
  int exit_code = kOk;
  std::map<std::string, std::string> files;  // name -> contents, written under out_dir
};

namespace detail {

inline double get_double(const json& cfg, const char* key, double fallback, const std::string& where) {
  return cfg.contains(key) ? io::get_as<double>(cfg.at(key), where + "." + key) : fallback;
}

inline int get_int(const json& cfg, const char* key, int fallback, const std::string& where) {
  return cfg.contains(key) ? io::get_as<int>(cfg.at(key), where + "." + key) : fallback;
}

inline bool get_bool(const json& cfg, const char* key, bool fallback, const std::string& where) {
  return cfg.contains(key) ? io::get_as<bool>(cfg.at(key), where + "." + key) : fallback;
}

template <class T>
std::vector<T> get_list(const json& cfg, const char* key, std::vector<T> fallback, const std::string& where) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_array()) return {io::get_as<T>(v, where + "." + key)};
  return io::get_as<std::vector<T>>(v, where + "." + key);
}

struct System {
  HarmonicHamiltonian h;
  double beta = 1.0;
};

/// "system" defaults to the qubit preset; "beta" falls back to the
/// Hamiltonian's own beta, then 1.
inline System read_system(const json& cfg) {
  System s{io::paper_qubit_hamiltonian(), 1.0};
  if (cfg.contains("system")) s.h = io::hamiltonian_from_json(cfg.at("system"), "system");
  if (s.h.beta()) s.beta = *s.h.beta();
  if (cfg.contains("beta")) s.beta = io::get_as<double>(cfg.at("beta"), "beta");
  if (s.beta < 0.0) io::schema_error("beta must be nonnegative");
  return s;
}

inline std::uint64_t seed_of(const json& cfg, const RunOptions& opt) {
  if (opt.seed_given) return opt.seed;
  return cfg.contains("seed") ? io::get_as<std::uint64_t>(cfg.at("seed"), "seed") : 0;
}

inline std::string csv_line(std::initializer_list<double> xs) {
  std::ostringstream os;
  os.precision(12);
  bool first = true;
  for (double x : xs) {
    if (!first) os << ',';
    os << x;
    first = false;
  }
  os << '\n';
  return os.str();
}

inline ClassicalDistribution populations(const DensityMatrix& rho) { return ClassicalDistribution::from_state(rho); }

/// Infinite values serialize as "inf" / "-inf".
inline json extended_real(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : "-inf";
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// {system, beta, state, alpha: [..]}
inline CommandResult cmd_free_energy(const json& cfg, const RunOptions& = {}) {
  io::check_keys(cfg, {"system", "beta", "state", "alpha", "seed"}, "config");
  const auto sys = detail::read_system(cfg);
  const DensityMatrix rho = io::state_from_json(io::require(cfg, "state", "config"), sys.h, sys.beta);
  CommandResult r;
  r.report["free_energy"] = free_energy(rho, sys.h, sys.beta);
  r.report["incoherent"] = is_incoherent(rho, sys.h);
  if (cfg.contains("alpha")) {
    if (!is_incoherent(rho, sys.h)) io::schema_error("alpha: extended free energies need a diagonal state");
    json ext = json::array();
    const json& aj = cfg.at("alpha");
    if (!aj.is_array()) io::schema_error("config.alpha: expected an array");
    for (const json& x : aj) {
      double a = 0.0;
      if (x.is_string() && x.get<std::string>() == "inf") a = kInf;
      else if (x.is_string() && x.get<std::string>() == "-inf") a = -kInf;
      else a = io::get_as<double>(x, "config.alpha");
      ext.push_back({{"alpha", detail::extended_real(a)},
                     {"value", detail::extended_real(extended_free_energy(detail::populations(rho), sys.h, sys.beta, a))},
                     {"endpoint", std::isinf(a)}});
    }
    r.report["extended_free_energy"] = ext;
  }
  return r;
}

/// {system, beta, p, p_prime}; writes lorenz_p.csv and lorenz_p_prime.csv.
inline CommandResult cmd_thermomajorize(const json& cfg, const RunOptions& = {}) {
  io::check_keys(cfg, {"system", "beta", "p", "p_prime", "tol", "seed"}, "config");
  const auto sys = detail::read_system(cfg);
  const double tol = detail::get_double(cfg, "tol", 1e-12, "config");
  const auto p = detail::populations(io::state_from_json(io::require(cfg, "p", "config"), sys.h, sys.beta, "p"));
  const auto pp =
      detail::populations(io::state_from_json(io::require(cfg, "p_prime", "config"), sys.h, sys.beta, "p_prime"));
  const auto q = gibbs_distribution(sys.h, sys.beta);
  CommandResult r;
  const bool verdict = thermomajorizes(p, pp, q, tol);
  r.report["verdict"] = verdict;
  r.report["margin"] = lorenz_margin(p, pp, q);
  r.report["tolerances"] = {{"lorenz", tol}};
  r.files["lorenz_p.csv"] = lorenz_curve(p, q).to_csv();
  r.files["lorenz_p_prime.csv"] = lorenz_curve(pp, q).to_csv();
  r.exit_code = verdict ? kOk : kNegative;
  return r;
}

/// {channel: <channel json> | {"random_gp": {system, copies, structure}}, beta, tol, checks: [...]}
inline CommandResult cmd_check_channel(const json& cfg, const RunOptions& opt = {}) {
  io::check_keys(cfg, {"channel", "beta", "tol", "checks", "seed"}, "config");
  const double beta = detail::get_double(cfg, "beta", 1.0, "config");
  const double tol = detail::get_double(cfg, "tol", 1e-9, "config");
  const json& cj = io::require(cfg, "channel", "config");
  std::optional<QuantumChannel> ch;
  if (cj.is_object() && cj.contains("random_gp")) {
    io::check_keys(cj, {"random_gp"}, "channel");
    const json& g = cj.at("random_gp");
    io::check_keys(g, {"system", "copies", "structure"}, "channel.random_gp");
    HarmonicHamiltonian h = g.contains("system") ? io::hamiltonian_from_json(g.at("system"), "channel.random_gp.system")
                                                 : io::paper_qubit_hamiltonian();
    h = tensor_power(h, detail::get_int(g, "copies", 1, "channel.random_gp"));
    const auto sname = g.contains("structure") ? io::get_as<std::string>(g.at("structure"), "structure") : "general";
    Structure s = Structure::general;
    if (sname == "covariant") s = Structure::covariant;
    else if (sname == "classical") s = Structure::classical;
    else if (sname != "general") io::schema_error("channel.random_gp.structure: unknown value '" + sname + "'");
    ch = random_gp_channel(h, beta, detail::seed_of(cfg, opt), s);
  } else {
    ch = io::channel_from_json(cj);
  }
  const auto checks = detail::get_list<std::string>(cfg, "checks", {"cptp", "gibbs", "covariant"}, "config");
  CommandResult r;
  bool all = true;
  for (const auto& c : checks) {
    ChannelReport rep;
    if (c == "cptp") rep = is_cptp(*ch, tol);
    else if (c == "gibbs") rep = is_gibbs_preserving(*ch, beta, tol);
    else if (c == "covariant") rep = is_covariant(*ch, tol);
    else if (c == "covariant_sampled") rep = is_covariant_sampled(*ch, tol);
    else io::schema_error("checks: unknown check '" + c + "'");
    r.report["checks"][c] = io::report_to_json(rep);
    all = all && rep.pass;
  }
  r.report["verdict"] = all;
  r.report["tolerances"] = {{"check", tol}};
  r.exit_code = all ? kOk : kNegative;
  return r;
}

/// {system, beta, rho_in, target, copies, epsilon, require_covariance,
///  diagonal_only, max_iters, tol, include_channel, minimize}
inline CommandResult cmd_feasibility(const json& cfg, const RunOptions& = {}) {
  io::check_keys(cfg,
                 {"system", "beta", "rho_in", "target", "copies", "epsilon", "require_covariance", "diagonal_only",
                  "max_iters", "tol", "include_channel", "minimize", "seed"},
                 "config");
  const auto sys = detail::read_system(cfg);
  const int copies = detail::get_int(cfg, "copies", 1, "config");
  if (copies < 1) io::schema_error("config.copies must be positive");
  const DensityMatrix rho = io::state_from_json(io::require(cfg, "rho_in", "config"), sys.h, sys.beta, "rho_in");
  const DensityMatrix tgt = io::state_from_json(io::require(cfg, "target", "config"), sys.h, sys.beta, "target");
  FeasibilityProblem p{tensor_power(rho, copies), tensor_power(tgt, copies), tensor_power(sys.h, copies)};
  p.beta = sys.beta;
  p.epsilon = detail::get_double(cfg, "epsilon", 0.0, "config");
  p.require_covariance = detail::get_bool(cfg, "require_covariance", false, "config");
  p.diagonal_only = detail::get_bool(cfg, "diagonal_only", false, "config");
  p.max_iters = detail::get_int(cfg, "max_iters", 20000, "config");
  p.tol = detail::get_double(cfg, "tol", 1e-8, "config");
  const bool include = detail::get_bool(cfg, "include_channel", false, "config");

  CommandResult r;
  FeasibilityOutcome o;
  if (detail::get_bool(cfg, "minimize", false, "config")) {
    auto s = minimal_epsilon(p);
    r.report["minimal_epsilon"] = s.epsilon;
    o = std::move(s.outcome);
  } else {
    o = p.require_covariance ? find_cgpo(p) : find_gpo(p);
  }
  r.report["outcome"] = io::outcome_to_json(o, include);
  r.report["structure"] = to_string(p.structure());
  r.report["tolerances"] = {{"solver", p.tol}, {"epsilon", p.epsilon}};
  // The oracle only speaks to exact classical convertibility.
  if (!o.oracle && is_incoherent(rho, sys.h) && is_incoherent(tgt, sys.h)) {
    o.oracle = blackwell_oracle(p.rho_in, p.target, p.h, p.beta);
    r.report["outcome"]["oracle"] = *o.oracle;
  }
  r.exit_code = o.found() ? kOk : kNegative;
  return r;
}

/// {system, state, reference, copies: [..], bins_per_copy, shots, seed};
/// writes phase_est.csv with columns m,variance,failure_prob.
inline CommandResult cmd_phase_est(const json& cfg, const RunOptions& opt = {}) {
  io::check_keys(cfg, {"system", "beta", "state", "reference", "copies", "bins_per_copy", "shots", "seed"}, "config");
  const auto sys = detail::read_system(cfg);
  const DensityMatrix rho =
      cfg.contains("state") ? io::state_from_json(cfg.at("state"), sys.h, sys.beta) : plus_state();
  std::optional<DensityMatrix> ref;
  if (cfg.contains("reference")) ref = io::state_from_json(cfg.at("reference"), sys.h, sys.beta, "reference");
  else if (cgpo::detail::has_full_period(rho, sys.h)) ref = rho;
  const auto ms = detail::get_list<int>(cfg, "copies", {4, 8, 16, 32, 64}, "config");
  const int per = detail::get_int(cfg, "bins_per_copy", 4, "config");
  const int shots = detail::get_int(cfg, "shots", 0, "config");
  const std::uint64_t seed = detail::seed_of(cfg, opt);

  CommandResult r;
  std::string csv = "m,variance,failure_prob\n";
  json rows = json::array();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const int m = ms[i];
    const int bins = std::max(per * m * std::max(sys.h.spread(), 1), m * sys.h.spread() + 1);
    const PhasePOVM povm = build_phase_povm(sys.h, m, bins, ref);
    const auto d = estimate_phase_product(rho, povm);
    double var = d.circular_variance;
    if (shots > 0) {
      Rng rng(seed + i);
      var = sampled_circular_stats(d, shots, rng).variance;
    }
    rows.push_back({{"m", m}, {"bins", bins}, {"variance", var}, {"exact_variance", d.circular_variance},
                    {"failure_prob", d.failure_probability}, {"circular_mean", d.circular_mean}});
    csv += detail::csv_line({double(m), var, d.failure_probability});
    if (var > 0.0) {
      lx.push_back(std::log(double(m)));
      ly.push_back(std::log(var));
    }
  }
  r.report["series"] = rows;
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    r.report["loglog_slope"] = sxy / sxx;
  }
  r.report["shots"] = shots;
  r.files["phase_est.csv"] = csv;
  return r;
}

/// {system, beta, rho, rho_prime, N, delta, set_size, bins: [..], delta1: [..],
///  wiring, seed}; writes pipeline.csv.
inline CommandResult cmd_pipeline(const json& cfg, const RunOptions& opt = {}) {
  io::check_keys(cfg,
                 {"system", "beta", "rho", "rho_prime", "N", "delta", "set_size", "bins", "delta1", "wiring",
                  "max_iters", "tol", "seed"},
                 "config");
  const auto sys = detail::read_system(cfg);
  const DensityMatrix rho = cfg.contains("rho") ? io::state_from_json(cfg.at("rho"), sys.h, sys.beta, "rho")
                                                : plus_state();
  const DensityMatrix rp = cfg.contains("rho_prime")
                               ? io::state_from_json(cfg.at("rho_prime"), sys.h, sys.beta, "rho_prime")
                               : rho;
  const int n = detail::get_int(cfg, "N", 4, "config");
  const double delta = detail::get_double(cfg, "delta", 0.5, "config");
  const int s = detail::get_int(cfg, "set_size", 2, "config");
  const auto bins = detail::get_list<int>(cfg, "bins", {8, 16}, "config");
  const auto d1s = detail::get_list<double>(cfg, "delta1", {0.05, 0.1}, "config");
  const double tol = detail::get_double(cfg, "tol", 1e-9, "config");
  const auto wname = cfg.contains("wiring") ? io::get_as<std::string>(cfg.at("wiring"), "wiring") : "independent";
  Wiring wiring = Wiring::independent;
  if (wname == "shared") wiring = Wiring::shared;
  else if (wname == "bare") wiring = Wiring::bare;
  else if (wname != "independent") io::schema_error("config.wiring: unknown value '" + wname + "'");
  std::optional<DensityMatrix> ref;
  if (cgpo::detail::has_full_period(rho, sys.h)) ref = rho;

  CommandResult r;
  std::string csv = "L,delta1,measured,shift_term1,lambda_error,shift_term2,bound,covariance,gibbs\n";
  json rows = json::array();
  bool all = true;
  const HarmonicHamiltonian hs = tensor_power(sys.h, s);
  for (double d1 : d1s) {
    FeasibilityProblem fp{tensor_power(rho, s), tensor_power(rp, s), hs};
    fp.beta = sys.beta;
    // Frobenius radius d1/sqrt(dim) keeps the trace-norm error below d1.
    fp.epsilon = d1 / std::sqrt(double(hs.dim()));
    fp.max_iters = detail::get_int(cfg, "max_iters", 20000, "config");
    const auto o = find_gpo(fp);
    if (!o.found()) {
      rows.push_back({{"delta1", d1}, {"status", "lambda_not_found"}});
      all = false;
      continue;
    }
    for (int L : bins) {
      const auto p = PipelineParams::resolve(n, delta, s, L, d1);
      const auto b = pipeline_error_budget(*o.channel, sys.h, sys.beta, p, rho, rp, ref);
      const QuantumChannel pipe = cgpo_pipeline(*o.channel, sys.h, sys.beta, p, wiring, ref);
      const auto cov = is_covariant(pipe, tol);
      const auto gp = is_gibbs_preserving(pipe, sys.beta, tol);
      const bool ok = b.measured <= b.bound() + 1e-12 && b.lambda_error <= d1 + 1e-12;
      all = all && ok && gp.pass && (cov.pass || wiring == Wiring::bare);
      rows.push_back({{"L", L}, {"delta1", d1}, {"nu", p.nu}, {"b1", p.b1}, {"b2", p.b2},
                      {"measured", b.measured}, {"shift_term1", b.shift_term1}, {"lambda_error", b.lambda_error},
                      {"shift_term2", b.shift_term2}, {"bound", b.bound()}, {"bound_holds", ok},
                      {"covariance", io::report_to_json(cov)}, {"gibbs", io::report_to_json(gp)},
                      {"failure1", b.failure1}, {"failure2", b.failure2}});
      csv += detail::csv_line({double(L), d1, b.measured, b.shift_term1, b.lambda_error, b.shift_term2, b.bound(),
                               cov.violation, gp.violation});
    }
  }
  if (detail::seed_of(cfg, opt) != 0 && !d1s.empty()) {
    // One sampled run of the exact channel for the first sweep point.
    FeasibilityProblem fp{tensor_power(rho, s), tensor_power(rp, s), hs};
    fp.beta = sys.beta;
    fp.epsilon = d1s.front() / std::sqrt(double(hs.dim()));
    const auto o = find_gpo(fp);
    if (o.found()) {
      const auto p = PipelineParams::resolve(n, delta, s, bins.empty() ? 8 : bins.front(), d1s.front());
      const auto smp = pipeline_sample(*o.channel, sys.h, sys.beta, p, rho, detail::seed_of(cfg, opt), ref);
      r.report["sample"] = {{"t1", smp.t1}, {"t2", smp.t2},
                            {"set_error", trace_distance(smp.set_state, tensor_power(rp, s))}};
    }
  }
  r.report["wiring"] = wname;
  r.report["sweep"] = rows;
  r.report["verdict"] = all;
  r.report["tolerances"] = {{"check", tol}};
  r.files["pipeline.csv"] = csv;
  r.exit_code = all ? kOk : kNegative;
  return r;
}

/// mode "compile": {system, beta, rho, rho_prime, n, epsilon} finds a
/// covariant GP map on n copies and compiles the catalyst.
/// mode "convert": {system, beta, rho, rho_prime, budget{...}} runs the full
/// driver over both routes.
inline CommandResult cmd_catalyst(const json& cfg, const RunOptions& = {}) {
  io::check_keys(cfg, {"system", "beta", "rho", "rho_prime", "mode", "n", "epsilon", "budget", "seed"}, "config");
  const auto sys = detail::read_system(cfg);
  const DensityMatrix rho = io::state_from_json(io::require(cfg, "rho", "config"), sys.h, sys.beta, "rho");
  const DensityMatrix rp = io::state_from_json(io::require(cfg, "rho_prime", "config"), sys.h, sys.beta, "rho_prime");
  const auto mode = cfg.contains("mode") ? io::get_as<std::string>(cfg.at("mode"), "mode") : "compile";
  CommandResult r;
  r.report["mode"] = mode;
  if (mode == "compile") {
    const int n = detail::get_int(cfg, "n", 3, "config");
    FeasibilityProblem p{tensor_power(rho, n), tensor_power(rp, n), tensor_power(sys.h, n)};
    p.beta = sys.beta;
    p.require_covariance = true;
    FeasibilityOutcome o;
    if (cfg.contains("epsilon")) {
      p.epsilon = io::get_as<double>(cfg.at("epsilon"), "epsilon");
      o = find_cgpo(p);
    } else {
      auto s = minimal_epsilon(p);
      p.epsilon = s.epsilon;
      o = std::move(s.outcome);
    }
    r.report["epsilon"] = p.epsilon;
    r.report["outcome"] = io::outcome_to_json(o);
    if (!o.found()) {
      r.exit_code = kNegative;
      return r;
    }
    const auto run = build_catalyst(*o.channel, rho, n);
    const double marg = max_marginal_error(*o.channel, rho, rp, n);
    const double err = trace_distance(run.report.output, rp);
    r.report["catalyst_dim"] = run.report.catalyst_dim;
    r.report["catalyst_deviation"] = run.report.catalyst_deviation;
    r.report["marginal_deviation"] = run.report.marginal_deviation;
    r.report["max_marginal_error"] = marg;
    r.report["conversion_error"] = err;
    r.report["output"] = io::state_to_json(run.report.output);
    const bool ok = run.report.catalyst_deviation <= 1e-9 && err <= marg + 1e-9;
    r.report["verdict"] = ok;
    r.exit_code = ok ? kOk : kNegative;
    return r;
  }
  if (mode != "convert") io::schema_error("config.mode: unknown value '" + mode + "'");
  ConversionBudget b;
  if (cfg.contains("budget")) {
    const json& bj = cfg.at("budget");
    io::check_keys(bj,
                   {"direct_copies", "pipeline_copies", "set_size", "delta", "bins", "bisection_steps", "max_iters",
                    "tol"},
                   "budget");
    b.direct_copies = detail::get_int(bj, "direct_copies", b.direct_copies, "budget");
    b.pipeline_copies = detail::get_int(bj, "pipeline_copies", b.pipeline_copies, "budget");
    b.set_size = detail::get_int(bj, "set_size", b.set_size, "budget");
    b.delta = detail::get_double(bj, "delta", b.delta, "budget");
    b.bins = detail::get_int(bj, "bins", b.bins, "budget");
    b.bisection_steps = detail::get_int(bj, "bisection_steps", b.bisection_steps, "budget");
    b.max_iters = detail::get_int(bj, "max_iters", b.max_iters, "budget");
    b.tol = detail::get_double(bj, "tol", b.tol, "budget");
  }
  const auto rep = correlated_catalytic_convert(rho, rp, sys.h, sys.beta, b);
  r.report["free_energy_in"] = rep.free_energy_in;
  r.report["free_energy_out"] = rep.free_energy_out;
  r.report["allowed"] = rep.allowed;
  r.report["warnings"] = rep.warnings;
  json routes = json::array();
  for (const auto& x : rep.routes) {
    routes.push_back({{"name", x.name}, {"attempted", x.attempted}, {"note", x.note}, {"copies", x.copies},
                      {"lambda_epsilon", x.lambda_epsilon}, {"lambda_marginal_error", x.lambda_marginal_error},
                      {"conversion_error", x.conversion_error}, {"catalyst_deviation", x.catalyst_deviation},
                      {"covariance_violation", x.covariance_violation}, {"gibbs_violation", x.gibbs_violation},
                      {"catalyst_dim", x.catalyst_dim}});
  }
  r.report["routes"] = routes;
  r.report["best_route"] = rep.best_route;
  r.report["best_error"] = detail::extended_real(rep.best_error);
  r.exit_code = rep.allowed && !rep.best_route.empty() ? kOk : kNegative;
  return r;
}

// ---------------------------------------------------------------------------
// Worked qubit example

struct ExampleOptions {
  double c_lo = 0.994;
  double c_hi = 0.995;
  double c_step = 1e-5;
  int copies = 8;
  double epsilon = 0.01;
};

/// Mixture c |+><+|^n + (1-c) (gamma^n - w |+><+|^n) / (1 - w), w = 25/4^8.
inline Matrix example_xi(double c, const Matrix& plus_n, const Matrix& gamma_n, double w) {
  return c * plus_n + (1.0 - c) * (gamma_n - w * plus_n) / (1.0 - w);
}

inline CommandResult cmd_reproduce_example(const json& cfg, const RunOptions& = {}) {
  io::check_keys(cfg, {"c_lo", "c_hi", "c_step", "epsilon", "seed"}, "config");
  ExampleOptions o;
  o.c_lo = detail::get_double(cfg, "c_lo", o.c_lo, "config");
  o.c_hi = detail::get_double(cfg, "c_hi", o.c_hi, "config");
  o.c_step = detail::get_double(cfg, "c_step", o.c_step, "config");
  o.epsilon = detail::get_double(cfg, "epsilon", o.epsilon, "config");
  if (!(o.c_step > 0.0) || o.c_hi < o.c_lo) io::schema_error("config: invalid scan range");

  const HarmonicHamiltonian h = io::paper_qubit_hamiltonian();
  const double beta = 1.0;
  const DensityMatrix rho = io::paper_qubit_rho();
  const DensityMatrix plus = plus_state();
  CommandResult r;
  json checks;

  // (1) free energies
  const double f_in = free_energy(rho, h, beta);
  const double f_out = free_energy(plus, h, beta);
  const bool c1 = std::abs(f_in - 1.291) <= 1e-3 && std::abs(f_out - 0.836) <= 1e-3;
  checks["free_energies"] = {{"pass", c1}, {"F_rho", f_in}, {"F_rho_prime", f_out}};

  // (3) bracket operator gamma^8 - w |+><+|^8
  const Matrix gamma_n = gibbs_state(tensor_power(h, o.copies), beta).matrix();
  const Matrix plus_n = tensor_power(plus, o.copies).matrix();
  const double w = 25.0 / std::pow(4.0, o.copies);
  const Matrix bracket = gamma_n - w * plus_n;
  const double bracket_min = eigh(bracket).values.minCoeff();
  // <+|gamma^-1|+>^-n is the largest w keeping the bracket PSD.
  const Matrix g1 = gibbs_state(h, beta).matrix();
  const double inv_expect = (plus.matrix() * g1.inverse()).trace().real();
  const double w_max = std::pow(inv_expect, -o.copies);
  const bool c3 = bracket_min >= -1e-12 && w <= w_max;
  checks["bracket_psd"] = {{"pass", c3}, {"min_eigenvalue", bracket_min}, {"weight", w}, {"oracle_weight_max", w_max}};

  // (2) scan c. Xi - |+><+|^n = (1-c)(B/(1-w) - |+><+|^n), so the distance
  // is linear in 1-c; PSD at both ends of the scan covers the interval.
  const Matrix gap = bracket / (1.0 - w) - plus_n;
  const double gap_norm = trace_norm_hermitian(gap);
  double best_c = o.c_lo, best_d = kInf, worst_trace = 0.0;
  const int steps = int(std::floor((o.c_hi - o.c_lo) / o.c_step + 1e-9));
  for (int k = 0; k <= steps; ++k) {
    const double c = o.c_lo + k * o.c_step;
    const Matrix xi = example_xi(c, plus_n, gamma_n, w);
    worst_trace = std::max(worst_trace, std::abs(xi.trace().real() - 1.0));
    const double d = (1.0 - c) * gap_norm;
    if (d < best_d) {
      best_d = d;
      best_c = c;
    }
  }
  const Matrix xi_best = example_xi(best_c, plus_n, gamma_n, w);
  const double d_direct = trace_distance(DensityMatrix(xi_best), tensor_power(plus, o.copies));
  const double min_eig = std::min(eigh(example_xi(o.c_lo, plus_n, gamma_n, w)).values.minCoeff(),
                                  eigh(example_xi(o.c_lo + steps * o.c_step, plus_n, gamma_n, w)).values.minCoeff());
  const bool c2 = worst_trace <= 1e-12 && min_eig >= -1e-12 && d_direct < o.epsilon;
  checks["witness"] = {{"pass", c2},
                       {"c", best_c},
                       {"trace_distance", d_direct},
                       {"first_c_below_epsilon", nullptr},
                       {"max_trace_error", worst_trace},
                       {"min_eigenvalue", min_eig},
                       {"scan", {{"lo", o.c_lo}, {"hi", o.c_hi}, {"step", o.c_step}}}};
  for (int k = 0; k <= steps; ++k) {
    const double c = o.c_lo + k * o.c_step;
    if ((1.0 - c) * gap_norm < o.epsilon) {
      checks["witness"]["first_c_below_epsilon"] = c;
      break;
    }
  }

  // (4) necessary condition on the witness
  const double f_xi = free_energy(DensityMatrix(xi_best), tensor_power(h, o.copies), beta);
  const double f_rho_n = o.copies * f_in;
  const bool c4 = f_rho_n >= f_xi;
  checks["free_energy_condition"] = {{"pass", c4}, {"n_F_rho", f_rho_n}, {"F_xi", f_xi}};

  // (5) single shot covariant search
  FeasibilityProblem p{rho, plus, h};
  p.beta = beta;
  p.epsilon = o.epsilon;
  const auto out = find_cgpo(p);
  const bool c5 = !out.found();
  checks["single_shot"] = {{"pass", c5}, {"epsilon", o.epsilon}, {"outcome", io::outcome_to_json(out)}};

  const bool all = c1 && c2 && c3 && c4 && c5;
  r.report["checks"] = checks;
  r.report["verdict"] = all;
  r.report["tolerances"] = {{"free_energy", 1e-3}, {"psd", 1e-12}, {"epsilon", o.epsilon}};
  r.exit_code = all ? kOk : kNegative;
  return r;
}

// ---------------------------------------------------------------------------

using CommandFn = std::function<CommandResult(const json&, const RunOptions&)>;

inline const std::map<std::string, CommandFn>& commands() {
  static const std::map<std::string, CommandFn> table = {
      {"free-energy", cmd_free_energy},   {"thermomajorize", cmd_thermomajorize},
      {"check-channel", cmd_check_channel}, {"feasibility", cmd_feasibility},
      {"phase-est", cmd_phase_est},       {"pipeline", cmd_pipeline},
      {"catalyst", cmd_catalyst},         {"reproduce-example", cmd_reproduce_example},
  };
  return table;
}

/// Runs a subcommand, stamping the common report fields and mapping
/// library errors to exit code 1.
inline CommandResult run_command(const std::string& name, const json& cfg, const RunOptions& opt = {}) {
  CommandResult r;
  const auto it = commands().find(name);
  try {
    if (it == commands().end()) throw Error("unknown_command", "unknown subcommand '" + name + "'");
    r = it->second(cfg, opt);
  } catch (const Error& e) {
    r.report = {{"error", {{"code", e.code()}, {"message", e.what()}}}};
    r.exit_code = kError;
    r.files.clear();
  } catch (const json::exception& e) {
    r.report = {{"error", {{"code", "schema_violation"}, {"message", e.what()}}}};
    r.exit_code = kError;
    r.files.clear();
  }
  r.report["command"] = name;
  r.report["version"] = kVersion;
  r.report["config_hash"] = io::config_hash(cfg);
  try {
    r.report["seed"] = cfg.is_object() ? detail::seed_of(cfg, opt) : opt.seed;
  } catch (const Error&) {
    r.report["seed"] = nullptr;
  }
  r.report["max_dim"] = max_total_dim();
  if (!r.report.contains("tolerances")) r.report["tolerances"] = json::object();
  r.report["exit_code"] = r.exit_code;
  return r;
}

inline void write_outputs(const CommandResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream(fs::path(dir) / "report.json") << r.report.dump(2) << '\n';
  for (const auto& [name, body] : r.files) std::ofstream(fs::path(dir) / name) << body;
}

}  // namespace cgpo::cli
