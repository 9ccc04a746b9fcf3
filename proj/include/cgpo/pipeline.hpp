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

#include <map>

#include "cgpo/phase_estimation.hpp"

namespace cgpo {

/// Copy bookkeeping for the estimate / convert / shift-back sandwich.
/// Input copies are ordered [A_1 .. A_nu][B1][B2].
struct PipelineParams {
  int N = 4;
  double delta = 0.5;
  int set_size = 2;
  int nu = 1;
  int b1 = 1;
  int b2 = 1;
  int L = 8;
  double delta1 = 0.1;
  double epsilon = 0.1;

  int output_copies() const { return nu * set_size; }

  /// nu = floor((1-delta) N / set_size); the remainder goes to the two
  /// estimation blocks, B1 taking the extra copy when it is odd.
  static PipelineParams resolve(int n, double delta, int set_size, int bins, double delta1 = 0.1,
                                double epsilon = 0.1) {
    if (n < 1 || set_size < 1 || bins < 1) throw Error("invalid_argument", "pipeline sizes must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw Error("invalid_argument", "delta must lie in (0,1)");
    PipelineParams p;
    p.N = n;
    p.delta = delta;
    p.set_size = set_size;
    p.L = bins;
    p.delta1 = delta1;
    p.epsilon = epsilon;
    p.nu = int(std::floor((1.0 - delta) * n / set_size + 1e-12));
    const int rem = n - p.nu * set_size;
    p.b1 = (rem + 1) / 2;
    p.b2 = rem / 2;
    if (p.nu < 1) throw Error("invalid_argument", "no room for a conversion set: decrease delta or set_size");
    if (p.b2 < 1) throw Error("invalid_argument", "estimation blocks need at least two copies: increase delta");
    return p;
  }
};

/// How the estimates feed the two shifts.
///  - independent: B1 drives the first shift and B2 the second.
///  - shared:      one estimate from B1+B2 drives both shifts.
///  - bare:        no shifts; B is discarded.
enum class Wiring { independent, shared, bare };

/// Smallest L that keeps the bin sum free of aliasing, so the pipeline is
/// covariant for every real time shift.
inline int minimal_exact_bins(const PipelineParams& p, const HarmonicHamiltonian& h, Wiring w = Wiring::independent) {
  const int s = h.spread();
  const int a = p.output_copies() * s;
  switch (w) {
    case Wiring::independent:
      return a + std::max(p.b1, p.b2) * s + 1;
    case Wiring::shared:
      return 2 * a + (p.b1 + p.b2) * s + 1;
    case Wiring::bare:
      return 1;
  }
  return 1;
}

namespace detail {

inline void require_lambda(const QuantumChannel& lambda, const HarmonicHamiltonian& h, int set_size, double beta) {
  const HarmonicHamiltonian hs = tensor_power(h, set_size);
  if (!(lambda.h_in() == hs) || !(lambda.h_out() == hs)) {
    throw Error("dimension_mismatch", "conversion map must act on set_size copies");
  }
  if (!is_gibbs_preserving(lambda, beta, 1e-8).pass) {
    throw Error("not_gibbs_preserving", "conversion map is not Gibbs preserving");
  }
}

/// W_omega = sum_k exp(i*sign*delta*t_k*omega) * E_k^T for every omega in
/// [-span, span].
inline std::map<int, Matrix> phase_weighted_effects(const PhasePOVM& povm, int span, double sign) {
  const auto effects = povm.resolved_effects();
  std::map<int, Matrix> out;
  const double delta = povm.single_hamiltonian().delta();
  for (int w = -span; w <= span; ++w) {
    Matrix acc = Matrix::Zero(effects[0].rows(), effects[0].cols());
    for (int k = 0; k < povm.bins(); ++k) {
      acc += std::polar(1.0, sign * delta * povm.estimate(k) * w) * effects[std::size_t(k)].transpose();
    }
    out.emplace(w, std::move(acc));
  }
  return out;
}

}  // namespace detail

/// Largest d^N the exact pipeline builds (qubits: N <= 6); use
/// pipeline_sample beyond that.
inline constexpr std::size_t kPipelineMaxInputDim = 64;

/// Exact Choi matrix of the sandwich map from N copies to nu*set_size
/// copies, with the continuous estimator integral replaced by the POVM bin
/// sum (failure branches included).
inline QuantumChannel cgpo_pipeline(const QuantumChannel& lambda, const HarmonicHamiltonian& h, double beta,
                                    const PipelineParams& p, Wiring wiring = Wiring::independent,
                                    const std::optional<DensityMatrix>& reference = std::nullopt) {
  detail::require_lambda(lambda, h, p.set_size, beta);
  const int need = minimal_exact_bins(p, h, wiring);
  if (p.L < need) {
    throw Error("invalid_argument", "L too small for exact covariance: minimal valid L is " + std::to_string(need));
  }
  check_dim_budget(int_pow(h.dim(), p.N), kPipelineMaxInputDim);
  const HarmonicHamiltonian h_in = tensor_power(h, p.N);
  const HarmonicHamiltonian ha = tensor_power(h, p.output_copies());
  check_dim_budget(checked_product(h_in.dim(), ha.dim()));
  const QuantumChannel lam = tensor_power(lambda, p.nu);

  const Index da = Index(ha.dim());
  const Index din = Index(h_in.dim());
  const auto& na = ha.levels();
  const int span = ha.spread();
  Matrix j = Matrix::Zero(da * din, da * din);
  const Matrix& jl = lam.choi();

  if (wiring == Wiring::independent) {
    const PhasePOVM m1 = build_phase_povm(h, p.b1, p.L, reference);
    const PhasePOVM m2 = build_phase_povm(h, p.b2, p.L, reference);
    const auto w1 = detail::phase_weighted_effects(m1, span, +1.0);
    const auto w2 = detail::phase_weighted_effects(m2, span, -1.0);
    const Index d1 = Index(m1.total_dim()), d2 = Index(m2.total_dim());
    for (Index o = 0; o < da; ++o)
      for (Index op = 0; op < da; ++op) {
        const Matrix& v2 = w2.at(na[o] - na[op]);
        for (Index i = 0; i < da; ++i)
          for (Index jj = 0; jj < da; ++jj) {
            const Complex lij = jl(o * da + i, op * da + jj);
            if (lij == 0.0) continue;
            const Matrix& v1 = w1.at(na[i] - na[jj]);
            for (Index b1 = 0; b1 < d1; ++b1)
              for (Index c1 = 0; c1 < d1; ++c1)
                for (Index b2 = 0; b2 < d2; ++b2)
                  for (Index c2 = 0; c2 < d2; ++c2)
                    j(o * din + (i * d1 + b1) * d2 + b2, op * din + (jj * d1 + c1) * d2 + c2) =
                        lij * v1(b1, c1) * v2(b2, c2);
          }
      }
  } else if (wiring == Wiring::shared) {
    const PhasePOVM m = build_phase_povm(h, p.b1 + p.b2, p.L, reference);
    const auto w = detail::phase_weighted_effects(m, 2 * span, +1.0);
    const Index db = Index(m.total_dim());
    for (Index o = 0; o < da; ++o)
      for (Index op = 0; op < da; ++op)
        for (Index i = 0; i < da; ++i)
          for (Index jj = 0; jj < da; ++jj) {
            const Complex lij = jl(o * da + i, op * da + jj);
            if (lij == 0.0) continue;
            const Matrix& v = w.at((na[i] - na[jj]) - (na[o] - na[op]));
            for (Index b = 0; b < db; ++b)
              for (Index c = 0; c < db; ++c) j(o * din + i * db + b, op * din + jj * db + c) = lij * v(b, c);
          }
  } else {
    const Index db = din / da;
    for (Index o = 0; o < da; ++o)
      for (Index op = 0; op < da; ++op)
        for (Index i = 0; i < da; ++i)
          for (Index jj = 0; jj < da; ++jj)
            for (Index b = 0; b < db; ++b) j(o * din + i * db + b, op * din + jj * db + b) = jl(o * da + i, op * da + jj);
  }
  return QuantumChannel(j, h_in, ha, QuantumChannel::Unchecked{});
}

/// One run of the sandwich on rho^(x)N: the two sampled estimates and the
/// state of a single conversion set (all sets share the same estimates).
struct PipelineSample {
  double t1 = 0.0;
  double t2 = 0.0;
  DensityMatrix set_state;
  int sets = 0;
};

inline PipelineSample pipeline_sample(const QuantumChannel& lambda, const HarmonicHamiltonian& h, double beta,
                                      const PipelineParams& p, const DensityMatrix& rho, std::uint64_t seed,
                                      const std::optional<DensityMatrix>& reference = std::nullopt) {
  detail::require_lambda(lambda, h, p.set_size, beta);
  Rng rng(seed);
  const PhasePOVM m1 = build_phase_povm(h, p.b1, p.L, reference);
  const PhasePOVM m2 = build_phase_povm(h, p.b2, p.L, reference);
  PipelineSample s;
  s.t1 = sample_phase(estimate_phase_product(rho, m1), rng);
  s.t2 = sample_phase(estimate_phase_product(rho, m2), rng);
  const HarmonicHamiltonian hs = tensor_power(h, p.set_size);
  const DensityMatrix in = time_evolve(tensor_power(rho, p.set_size), hs, -s.t1);
  s.set_state = time_evolve(cgpo::apply(lambda, in), hs, s.t2);
  s.sets = p.nu;
  return s;
}

/// The three contributions bounding the error of one conversion set:
///   |set - rho'^s|_1 <= 2 sqrt2 b(set, L(zeta)) + delta1 + 2 sqrt2 b(zeta, rho^s)
/// with zeta the estimator-averaged input of the conversion map.
struct ErrorBudget {
  double measured = 0.0;
  double shift_term1 = 0.0;
  double lambda_error = 0.0;  // |L(rho^s) - rho'^s|_1 as achieved
  double delta1 = 0.0;
  double shift_term2 = 0.0;
  double failure1 = 0.0;
  double failure2 = 0.0;
  DensityMatrix set_state;

  double bound() const { return shift_term1 + delta1 + shift_term2; }
  double bound_achieved() const { return shift_term1 + lambda_error + shift_term2; }
};

inline ErrorBudget pipeline_error_budget(const QuantumChannel& lambda, const HarmonicHamiltonian& h, double beta,
                                         const PipelineParams& p, const DensityMatrix& rho,
                                         const DensityMatrix& rho_prime,
                                         const std::optional<DensityMatrix>& reference = std::nullopt) {
  detail::require_lambda(lambda, h, p.set_size, beta);
  const PhasePOVM m1 = build_phase_povm(h, p.b1, p.L, reference);
  const PhasePOVM m2 = build_phase_povm(h, p.b2, p.L, reference);
  const auto d1 = estimate_phase_product(rho, m1);
  const auto d2 = estimate_phase_product(rho, m2);
  const HarmonicHamiltonian hs = tensor_power(h, p.set_size);
  const DensityMatrix rs = tensor_power(rho, p.set_size);
  const DensityMatrix ts = tensor_power(rho_prime, p.set_size);

  Matrix zeta = Matrix::Zero(rs.matrix().rows(), rs.matrix().cols());
  for (std::size_t k = 0; k < d1.probs.size(); ++k) zeta += d1.probs[k] * time_evolve(rs.matrix(), hs, -d1.support[k]);
  const Matrix lz = cgpo::apply(lambda, zeta);
  Matrix out = Matrix::Zero(lz.rows(), lz.cols());
  for (std::size_t k = 0; k < d2.probs.size(); ++k) out += d2.probs[k] * time_evolve(lz, hs, d2.support[k]);

  ErrorBudget b;
  const DensityMatrix zs(zeta, DensityMatrix::Unchecked{});
  const DensityMatrix lzs(lz, DensityMatrix::Unchecked{});
  b.set_state = DensityMatrix(out, DensityMatrix::Unchecked{});
  b.measured = trace_distance(b.set_state, ts);
  b.shift_term1 = 2.0 * std::sqrt(2.0) * bures_distance(b.set_state, lzs);
  b.shift_term2 = 2.0 * std::sqrt(2.0) * bures_distance(zs, rs);
  b.lambda_error = trace_distance(cgpo::apply(lambda, rs), ts);
  b.delta1 = p.delta1;
  b.failure1 = d1.failure_probability;
  b.failure2 = d2.failure_probability;
  return b;
}

// ---------------------------------------------------------------------------
// Sublinear-rate preparation

/// Estimates t from rho^(x)N (N = povm copies) and outputs the shifted
/// rho'^(x)M. M = 0 gives the trivial one-dimensional state.
inline DensityMatrix sublinear_prepare(const DensityMatrix& rho, const DensityMatrix& rho_prime, int m,
                                       const PhasePOVM& povm, std::uint64_t seed) {
  if (m < 0) throw Error("invalid_argument", "negative output copy count");
  if (m == 0) return DensityMatrix();
  Rng rng(seed);
  const double t = sample_phase(estimate_phase_product(rho, povm), rng);
  const HarmonicHamiltonian& h = povm.single_hamiltonian();
  return time_evolve(tensor_power(rho_prime, m), tensor_power(h, m), t);
}

/// Exact mean of |output - rho'^(x)M|_1 over the estimator distribution.
inline double sublinear_expected_error(const DensityMatrix& rho, const DensityMatrix& rho_prime, int m,
                                       const PhasePOVM& povm) {
  if (m == 0) return 0.0;
  const auto d = estimate_phase_product(rho, povm);
  const HarmonicHamiltonian hm = tensor_power(povm.single_hamiltonian(), m);
  const DensityMatrix target = tensor_power(rho_prime, m);
  double err = 0.0;
  for (std::size_t k = 0; k < d.probs.size(); ++k) {
    if (d.probs[k] == 0.0) continue;
    err += d.probs[k] * trace_distance(time_evolve(target, hm, d.support[k]), target);
  }
  return err;
}

/// Largest b^2(rho, T_t rho)/t^2 over a grid of `samples` points in
/// (0, t_max]: an empirical constant C with b^2 <= C t^2 on that range.
inline double fit_bures_shift_constant(const DensityMatrix& rho, const HarmonicHamiltonian& h, double t_max,
                                       int samples = 200) {
  double c = 0.0;
  for (int k = 1; k <= samples; ++k) {
    const double t = t_max * k / samples;
    const double b = bures_distance(rho, time_evolve(rho, h, t));
    c = std::max(c, b * b / (t * t));
  }
  return c;
}

}  // namespace cgpo
