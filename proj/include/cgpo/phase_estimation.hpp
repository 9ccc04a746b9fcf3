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

#include <optional>

#include "cgpo/channels.hpp"

namespace cgpo {

/// x wrapped into (-period/2, period/2].
inline double wrap_signed(double x, double period) {
  double r = std::fmod(x, period);
  if (r > 0.5 * period) r -= period;
  if (r <= -0.5 * period) r += period;
  return r;
}

/// x wrapped into [0, period).
inline double wrap_positive(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

struct CircularStats {
  double mean = 0.0;      // in (-period/2, period/2]
  double variance = 0.0;  // of the wrapped difference from the mean
};

inline CircularStats circular_stats(const std::vector<double>& support, const std::vector<double>& probs,
                                    double period) {
  Complex z = 0.0;
  for (std::size_t k = 0; k < support.size(); ++k) z += probs[k] * std::polar(1.0, 2.0 * std::numbers::pi * support[k] / period);
  CircularStats s;
  // A (near) uniform distribution has no preferred direction; report 0.
  s.mean = std::abs(z) <= 1e-12 ? 0.0 : wrap_signed(std::arg(z) * period / (2.0 * std::numbers::pi), period);
  for (std::size_t k = 0; k < support.size(); ++k) {
    const double d = wrap_signed(support[k] - s.mean, period);
    s.variance += probs[k] * d * d;
  }
  return s;
}

/// P(t_est | state) over the bins, with the failure branch already spread
/// uniformly.
struct EstimatorDistribution {
  double period = 0.0;
  std::vector<double> support;  // estimates in [0, period)
  std::vector<double> probs;
  double failure_probability = 0.0;
  double circular_mean = 0.0;
  double circular_variance = 0.0;
};

/// Covariant time-estimation measurement on m copies of a harmonic system.
///
/// M_k = (1/L) e^{-iHt_k} |e><e| e^{iHt_k}, t_k = k*period/L, where |e>
/// sums the normalized uniform superpositions of every total-energy
/// eigenspace; M_fail = I - sum_k M_k. Dense effects are only materialized
/// on request.
class PhasePOVM {
 public:
  PhasePOVM(HarmonicHamiltonian h, int copies, int bins) : h_(std::move(h)), copies_(copies), bins_(bins) {
    if (copies < 1) throw Error("invalid_argument", "phase estimation needs at least one copy");
    const int spread_total = copies * h_.spread();
    if (bins <= spread_total) {
      throw Error("invalid_argument", "L too small: need L > " + std::to_string(spread_total) +
                                          ", minimal valid L is " + std::to_string(spread_total + 1));
    }
    nmin_ = *std::min_element(h_.levels().begin(), h_.levels().end());
    std::vector<double> single(std::size_t(h_.spread() + 1), 0.0);
    for (int n : h_.levels()) single[std::size_t(n - nmin_)] += 1.0;
    counts_ = {1.0};
    for (int c = 0; c < copies; ++c) {
      std::vector<double> next(counts_.size() + single.size() - 1, 0.0);
      for (std::size_t a = 0; a < counts_.size(); ++a)
        for (std::size_t b = 0; b < single.size(); ++b) next[a + b] += counts_[a] * single[b];
      counts_ = std::move(next);
    }
  }

  const HarmonicHamiltonian& single_hamiltonian() const noexcept { return h_; }
  int copies() const noexcept { return copies_; }
  int bins() const noexcept { return bins_; }
  double period() const { return h_.period(); }
  double offset() const noexcept { return offset_; }
  double bin_time(int k) const { return period() * k / bins_; }
  /// Reported estimate for outcome k (calibrated).
  double estimate(int k) const { return wrap_positive(bin_time(k) - offset_, period()); }

  HarmonicHamiltonian total_hamiltonian() const { return tensor_power(h_, copies_); }
  std::size_t total_dim() const { return int_pow(h_.dim(), copies_); }

  /// Sets the origin so that the estimator mean on reference^(x)m is 0.
  void calibrate(const DensityMatrix& reference) {
    offset_ = 0.0;
    const auto raw = raw_probs_product(reference);
    std::vector<double> t(static_cast<std::size_t>(bins_));
    for (int k = 0; k < bins_; ++k) t[std::size_t(k)] = bin_time(k);
    offset_ = circular_stats(t, raw.first, period()).mean;
  }

  Matrix effect(int k) const {
    const ComplexVector v = effect_vector(k, relative_levels());
    return v * v.adjoint() / double(bins_);
  }

  Matrix failure_effect() const {
    const std::vector<int> rel = relative_levels();
    const Index d = Index(rel.size());
    Matrix m = Matrix::Identity(d, d);
    for (int k = 0; k < bins_; ++k) {
      const ComplexVector v = effect_vector(k, rel);
      m -= v * v.adjoint() / double(bins_);
    }
    return m;
  }

  /// Effects once failure is resolved uniformly: M_k + M_fail/L.
  std::vector<Matrix> resolved_effects() const {
    const Matrix fail = failure_effect() / double(bins_);
    std::vector<Matrix> out;
    for (int k = 0; k < bins_; ++k) out.push_back(effect(k) + fail);
    return out;
  }

  /// Per-bin probabilities (failure spread uniformly) and the failure
  /// probability, for an arbitrary state on the m copies.
  std::pair<std::vector<double>, double> raw_probs(const Matrix& state) const {
    if (std::size_t(state.rows()) != total_dim()) throw Error("dimension_mismatch", "state does not match POVM");
    std::vector<double> p(static_cast<std::size_t>(bins_));
    double total = 0.0;
    const std::vector<int> rel = relative_levels();
    for (int k = 0; k < bins_; ++k) {
      const ComplexVector v = effect_vector(k, rel);
      p[std::size_t(k)] = std::max(0.0, (v.adjoint() * state * v)(0, 0).real() / bins_);
      total += p[std::size_t(k)];
    }
    return spread_failure(std::move(p), total);
  }

  /// Same for rho^(x)m without building the m-copy state.
  std::pair<std::vector<double>, double> raw_probs_product(const DensityMatrix& rho) const {
    if (rho.dim() != h_.dim()) throw Error("dimension_mismatch", "state does not match POVM");
    const Matrix g = energy_block_sums(rho);
    const Index n = g.rows();
    std::vector<double> p(static_cast<std::size_t>(bins_));
    double total = 0.0;
    for (int k = 0; k < bins_; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / bins_;
      ComplexVector ph(n);
      for (Index e = 0; e < n; ++e) ph[e] = std::polar(1.0, -theta * double(e));
      p[std::size_t(k)] = std::max(0.0, (ph.adjoint() * g * ph)(0, 0).real() / bins_);
      total += p[std::size_t(k)];
    }
    return spread_failure(std::move(p), total);
  }

  EstimatorDistribution distribution(const std::pair<std::vector<double>, double>& raw) const {
    EstimatorDistribution d;
    d.period = period();
    d.probs = raw.first;
    d.failure_probability = raw.second;
    for (int k = 0; k < bins_; ++k) d.support.push_back(estimate(k));
    const auto s = circular_stats(d.support, d.probs, d.period);
    d.circular_mean = s.mean;
    d.circular_variance = s.variance;
    return d;
  }

 private:
  // Total level minus copies*min level, per computational basis state.
  std::vector<int> relative_levels() const {
    check_dim_budget(total_dim());
    std::vector<int> rel = total_hamiltonian().levels();
    for (int& n : rel) n -= copies_ * nmin_;
    return rel;
  }

  // |e_k> = e^{-iHt_k}|e> in the computational basis of the m copies.
  ComplexVector effect_vector(int k, const std::vector<int>& rel) const {
    const double theta = 2.0 * std::numbers::pi * k / bins_;
    ComplexVector v(Index(rel.size()));
    for (std::size_t a = 0; a < rel.size(); ++a) {
      v[Index(a)] = std::polar(1.0 / std::sqrt(counts_[std::size_t(rel[a])]), -theta * rel[a]);
    }
    return v;
  }

  // <e_E| rho^(x)m |e_E'> from the coefficients of
  // (sum_ab rho_ab z^{n_a} w^{n_b})^m.
  Matrix energy_block_sums(const DensityMatrix& rho) const {
    const std::size_t s = std::size_t(h_.spread());
    Matrix base = Matrix::Zero(Index(s + 1), Index(s + 1));
    for (std::size_t a = 0; a < h_.dim(); ++a)
      for (std::size_t b = 0; b < h_.dim(); ++b)
        base(h_.levels()[a] - nmin_, h_.levels()[b] - nmin_) += rho(Index(a), Index(b));
    Matrix acc = Matrix::Ones(1, 1);
    for (int c = 0; c < copies_; ++c) {
      Matrix next = Matrix::Zero(acc.rows() + Index(s), acc.cols() + Index(s));
      for (Index u = 0; u <= Index(s); ++u)
        for (Index v = 0; v <= Index(s); ++v)
          if (base(u, v) != 0.0) next.block(u, v, acc.rows(), acc.cols()) += base(u, v) * acc;
      acc = std::move(next);
    }
    for (Index e = 0; e < acc.rows(); ++e)
      for (Index f = 0; f < acc.cols(); ++f) {
        const double norm = std::sqrt(counts_[std::size_t(e)] * counts_[std::size_t(f)]);
        acc(e, f) = norm > 0.0 ? acc(e, f) / norm : 0.0;
      }
    return acc;
  }

  std::pair<std::vector<double>, double> spread_failure(std::vector<double> p, double total) const {
    const double fail = std::max(0.0, 1.0 - total);
    double sum = 0.0;
    for (auto& x : p) {
      x += fail / bins_;
      sum += x;
    }
    for (auto& x : p) x /= sum;
    return {std::move(p), fail};
  }

  HarmonicHamiltonian h_;
  int copies_;
  int bins_;
  int nmin_ = 0;
  double offset_ = 0.0;
  std::vector<double> counts_;  // degeneracy of each total energy, offset by copies*nmin
};

namespace detail {
inline bool has_full_period(const DensityMatrix& rho, const HarmonicHamiltonian& h, double tol = 1e-10) {
  int g = 0;
  for (std::size_t i = 0; i < h.dim(); ++i)
    for (std::size_t j = 0; j < h.dim(); ++j)
      if (std::abs(rho(Index(i), Index(j))) > tol) g = std::gcd(g, std::abs(h.levels()[i] - h.levels()[j]));
  return g == 1;
}
}  // namespace detail

/// POVM on `copies` copies of h with L bins, calibrated on reference when
/// one is given. The reference must have the full period 2*pi/delta.
inline PhasePOVM build_phase_povm(const HarmonicHamiltonian& h, int copies, int bins,
                                  const std::optional<DensityMatrix>& reference = std::nullopt) {
  PhasePOVM povm(h, copies, bins);
  if (reference) {
    if (!detail::has_full_period(*reference, h)) {
      throw Error("invalid_reference", "reference state does not have the full period 2*pi/delta");
    }
    povm.calibrate(*reference);
  }
  return povm;
}

/// Exact distribution on an arbitrary m-copy state.
inline EstimatorDistribution estimate_phase(const DensityMatrix& state, const PhasePOVM& povm) {
  return povm.distribution(povm.raw_probs(state.matrix()));
}

/// Exact distribution on rho^(x)m (single-copy rho).
inline EstimatorDistribution estimate_phase_product(const DensityMatrix& rho, const PhasePOVM& povm) {
  return povm.distribution(povm.raw_probs_product(rho));
}

/// One draw of t_est.
inline double sample_phase(const EstimatorDistribution& d, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(d.probs.begin(), d.probs.end());
  return d.support[pick(rng)];
}

/// Circular statistics of `shots` independent draws.
inline CircularStats sampled_circular_stats(const EstimatorDistribution& d, int shots, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(d.probs.begin(), d.probs.end());
  std::vector<double> counts(d.support.size(), 0.0);
  for (int s = 0; s < shots; ++s) counts[pick(rng)] += 1.0 / shots;
  return circular_stats(d.support, counts, d.period);
}

}  // namespace cgpo
