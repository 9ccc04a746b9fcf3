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

#include "cgpo/feasibility.hpp"
#include "cgpo/pipeline.hpp"

namespace cgpo {

/// c = (1/n) sum_k rho^(k-1) (x) tau_{n-k} (x) |k><k| on S^(n-1) (x) R, where
/// tau_i is the marginal of the first i systems of the source output.
struct CatalystState {
  int n = 1;
  std::size_t system_dim = 1;
  std::vector<DensityMatrix> blocks;  // blocks[k-1] lives on S^(n-1)

  std::size_t dim() const { return int_pow(system_dim, n - 1) * std::size_t(n); }

  Matrix matrix() const {
    const Index db = Index(int_pow(system_dim, n - 1));
    Matrix c = Matrix::Zero(db * n, db * n);
    for (int k = 0; k < n; ++k)
      for (Index a = 0; a < db; ++a)
        for (Index b = 0; b < db; ++b) c(a * n + k, b * n + k) = blocks[std::size_t(k)](a, b) / double(n);
    return c;
  }
};

struct CatalystReport {
  double catalyst_deviation = 0.0;  // max |Tr_S tau_joint - c|
  double marginal_deviation = 0.0;  // max |Tr_C tau_joint - (1/n) sum_k Tr_{\k} tau|
  std::size_t catalyst_dim = 0;
  DensityMatrix output;             // Tr_C tau_joint
  Matrix joint;                     // tau_joint on S (x) S^(n-1) (x) R
};

struct CatalystRun {
  CatalystState catalyst;
  CatalystReport report;
};

namespace detail {
/// First i systems of an n-system operator (i = 0 gives the scalar 1).
inline Matrix leading_marginal(const Matrix& op, std::size_t d, int n, int i) {
  std::vector<std::size_t> keep;
  for (int k = 0; k < i; ++k) keep.push_back(std::size_t(k));
  return partial_trace(op, std::vector<std::size_t>(std::size_t(n), d), keep);
}
}  // namespace detail

/// Builds the catalyst for a map on n copies and executes one round:
///   1. dephase the label,
///   2. apply the map when the label reads n,
///   3. relabel k -> k+1 (n -> 1),
///   4. move the last system to the front; it is the output S.
inline CatalystRun build_catalyst(const QuantumChannel& lambda, const DensityMatrix& rho, int n) {
  if (n < 1) throw Error("invalid_argument", "catalyst needs n >= 1");
  const std::size_t d = rho.dim();
  const std::size_t dn = int_pow(d, n);
  if (lambda.dim_in() != dn || lambda.dim_out() != dn) {
    throw Error("dimension_mismatch", "map must act on n copies of the system");
  }
  check_dim_budget(checked_product(dn, std::size_t(n)));
  const Matrix tau = cgpo::apply(lambda, tensor_power(rho, n).matrix());

  CatalystRun run;
  run.catalyst.n = n;
  run.catalyst.system_dim = d;
  for (int k = 1; k <= n; ++k) {
    const Matrix block = kron(tensor_power(rho, k - 1).matrix(), detail::leading_marginal(tau, d, n, n - k));
    run.catalyst.blocks.emplace_back(block, DensityMatrix::Unchecked{});
  }
  const Matrix c = run.catalyst.matrix();
  const Index dl = Index(n);
  const Index ds = Index(dn);

  // Joint state rho (x) c, label last: index x*n + (k-1) with x on S^n.
  Matrix joint = kron(rho.matrix(), c);
  for (Index a = 0; a < ds * dl; ++a)
    for (Index b = 0; b < ds * dl; ++b)
      if (a % dl != b % dl) joint(a, b) = 0.0;

  auto block = [&](const Matrix& m, Index k) {
    Matrix out(ds, ds);
    for (Index x = 0; x < ds; ++x)
      for (Index y = 0; y < ds; ++y) out(x, y) = m(x * dl + k, y * dl + k);
    return out;
  };
  std::vector<std::size_t> dims(std::size_t(n), d);
  std::vector<std::size_t> cyc(static_cast<std::size_t>(n));
  cyc[0] = std::size_t(n - 1);
  for (int q = 1; q < n; ++q) cyc[std::size_t(q)] = std::size_t(q - 1);

  Matrix out = Matrix::Zero(ds * dl, ds * dl);
  for (Index k = 0; k < dl; ++k) {
    Matrix b = block(joint, k);
    if (k == dl - 1) b = cgpo::apply(lambda, b);
    const Index nk = (k + 1) % dl;
    b = permute_subsystems(b, dims, cyc);
    for (Index x = 0; x < ds; ++x)
      for (Index y = 0; y < ds; ++y) out(x * dl + nk, y * dl + nk) = b(x, y);
  }

  // Factors of the joint output: S, S^(n-1), R.
  const std::vector<std::size_t> jdims = {d, int_pow(d, n - 1), std::size_t(n)};
  CatalystReport& r = run.report;
  r.joint = out;
  r.catalyst_dim = run.catalyst.dim();
  const Matrix cat = partial_trace(out, jdims, {1, 2});
  r.catalyst_deviation = max_abs(cat - c);
  const Matrix sys = partial_trace(out, jdims, {0});
  Matrix expect = Matrix::Zero(Index(d), Index(d));
  for (int k = 0; k < n; ++k) expect += partial_trace(tau, dims, {std::size_t(k)}) / double(n);
  r.marginal_deviation = max_abs(sys - expect);
  r.output = DensityMatrix(sys, DensityMatrix::Unchecked{});
  return run;
}

/// Worst single-copy marginal error of a map on n copies.
inline double max_marginal_error(const QuantumChannel& lambda, const DensityMatrix& rho,
                                 const DensityMatrix& rho_prime, int n) {
  const Matrix tau = cgpo::apply(lambda, tensor_power(rho, n).matrix());
  const std::vector<std::size_t> dims(std::size_t(n), rho.dim());
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const Matrix m = partial_trace(tau, dims, {std::size_t(k)});
    worst = std::max(worst, trace_norm_hermitian(m - rho_prime.matrix()));
  }
  return worst;
}

/// X -> map(X) (x) gamma^(extra): pads a map's output with Gibbs copies.
inline QuantumChannel pad_with_gibbs(const QuantumChannel& ch, const HarmonicHamiltonian& h, double beta, int extra) {
  if (extra == 0) return ch;
  const Matrix g = gibbs_state(tensor_power(h, extra), beta).matrix();
  const std::size_t dout = checked_product(ch.dim_out(), std::size_t(g.rows()));
  Matrix j = choi_from_map(ch.dim_in(), dout, [&](const Matrix& x) { return kron(cgpo::apply(ch, x), g); });
  return QuantumChannel(std::move(j), ch.h_in(), tensor(ch.h_out(), tensor_power(h, extra)),
                        QuantumChannel::Unchecked{});
}

// ---------------------------------------------------------------------------
// End-to-end driver

struct ConversionBudget {
  int direct_copies = 3;     // n for the direct covariant search
  int pipeline_copies = 4;   // N for the sandwich route
  int set_size = 2;
  double delta = 0.5;
  int bins = 8;
  int bisection_steps = 14;
  int max_iters = 20000;
  double tol = 1e-8;
};

struct RouteReport {
  std::string name;
  bool attempted = false;
  std::string note;
  int copies = 0;
  double lambda_epsilon = 0.0;       // Frobenius radius of the accepted search
  double lambda_marginal_error = 0.0;
  double conversion_error = 0.0;     // |Tr_C tau_joint - rho'|_1
  double catalyst_deviation = 0.0;
  double covariance_violation = 0.0;
  double gibbs_violation = 0.0;
  std::size_t catalyst_dim = 0;
};

struct ConversionReport {
  double free_energy_in = 0.0;
  double free_energy_out = 0.0;
  bool allowed = false;  // F(rho) >= F(rho')
  std::vector<RouteReport> routes;
  std::string best_route;
  double best_error = kInf;
  std::vector<std::string> warnings;
};

namespace detail {
inline void finish_route(RouteReport& r, const QuantumChannel& lambda_n, const DensityMatrix& rho,
                         const DensityMatrix& rho_prime, int n, double beta) {
  r.copies = n;
  r.lambda_marginal_error = max_marginal_error(lambda_n, rho, rho_prime, n);
  r.covariance_violation = is_covariant(lambda_n).violation;
  r.gibbs_violation = is_gibbs_preserving(lambda_n, beta).violation;
  const auto run = build_catalyst(lambda_n, rho, n);
  r.conversion_error = trace_distance(run.report.output, rho_prime);
  r.catalyst_deviation = run.report.catalyst_deviation;
  r.catalyst_dim = run.report.catalyst_dim;
}
}  // namespace detail

/// Free-energy check, then two compilations into a correlated-catalytic
/// covariant conversion:
///   direct:   covariant Gibbs-preserving search on n copies;
///   sandwich: Gibbs-preserving search on set_size copies, wrapped by the
///             estimate/shift pipeline and padded to rate one.
inline ConversionReport correlated_catalytic_convert(const DensityMatrix& rho, const DensityMatrix& rho_prime,
                                                     const HarmonicHamiltonian& h, double beta,
                                                     const ConversionBudget& budget = {}) {
  ConversionReport rep;
  rep.free_energy_in = free_energy(rho, h, beta);
  rep.free_energy_out = free_energy(rho_prime, h, beta);
  rep.allowed = rep.free_energy_in + 1e-12 >= rep.free_energy_out;
  if (!rep.allowed) {
    rep.warnings.push_back("free energy would increase by " +
                           std::to_string(rep.free_energy_out - rep.free_energy_in) + "; conversion impossible");
    return rep;
  }
  if (is_incoherent(rho, h) && !is_incoherent(rho_prime, h)) {
    rep.warnings.push_back(
        "input is incoherent: covariant maps, with or without a catalyst, only produce incoherent outputs, so "
        "the error cannot drop below the distance from the target to the incoherent states");
  }

  auto search = [&](int copies, bool covariant) {
    FeasibilityProblem p{tensor_power(rho, copies), tensor_power(rho_prime, copies), tensor_power(h, copies)};
    p.beta = beta;
    p.require_covariance = covariant;
    p.max_iters = budget.max_iters;
    p.tol = budget.tol;
    return minimal_epsilon(p, budget.bisection_steps);
  };

  {
    RouteReport r;
    r.name = "direct";
    try {
      auto s = search(budget.direct_copies, true);
      r.attempted = true;
      r.lambda_epsilon = s.epsilon;
      if (!s.outcome.channel) throw Error("not_found", "no covariant witness");
      detail::finish_route(r, *s.outcome.channel, rho, rho_prime, budget.direct_copies, beta);
    } catch (const Error& e) {
      r.note = e.what();
    }
    rep.routes.push_back(r);
  }
  {
    RouteReport r;
    r.name = "sandwich";
    try {
      auto s = search(budget.set_size, false);
      r.lambda_epsilon = s.epsilon;
      if (!s.outcome.channel) throw Error("not_found", "no Gibbs-preserving witness");
      const QuantumChannel& lam = *s.outcome.channel;
      if (is_covariant(lam, 1e-9).pass) {
        r.note = "conversion map already covariant; sandwich not needed";
      } else {
        r.attempted = true;
        const auto p = PipelineParams::resolve(budget.pipeline_copies, budget.delta, budget.set_size, budget.bins);
        std::optional<DensityMatrix> ref;
        if (detail::has_full_period(rho, h)) ref = rho;
        const QuantumChannel pipe = cgpo_pipeline(lam, h, beta, p, Wiring::independent, ref);
        const QuantumChannel full = pad_with_gibbs(pipe, h, beta, p.N - p.output_copies());
        detail::finish_route(r, full, rho, rho_prime, p.N, beta);
      }
    } catch (const Error& e) {
      r.note = e.what();
    }
    rep.routes.push_back(r);
  }
  for (const auto& r : rep.routes) {
    if (r.attempted && r.catalyst_dim > 0 && r.conversion_error < rep.best_error) {
      rep.best_error = r.conversion_error;
      rep.best_route = r.name;
    }
  }
  return rep;
}

}  // namespace cgpo
