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

#include <limits>
#include <sstream>

#include "cgpo/qcore.hpp"

namespace cgpo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Probability vector, normalized to 1e-12.
class ClassicalDistribution {
 public:
  ClassicalDistribution() = default;
  explicit ClassicalDistribution(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw Error("invalid_distribution", "empty distribution");
    double s = 0.0;
    for (double x : p_) {
      if (!std::isfinite(x) || x < 0.0) throw Error("invalid_distribution", "negative or non-finite entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) throw Error("invalid_distribution", "probabilities do not sum to 1");
  }
  /// Renormalizes after clipping tiny negatives; for numerically produced vectors.
  static ClassicalDistribution normalized(std::vector<double> p) {
    double s = 0.0;
    for (double& x : p) {
      x = std::max(0.0, x);
      s += x;
    }
    for (double& x : p) x /= s;
    return ClassicalDistribution(std::move(p));
  }
  static ClassicalDistribution from_state(const DensityMatrix& rho) {
    const RealVector d = rho.populations();
    return normalized(std::vector<double>(d.data(), d.data() + d.size()));
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& probs() const noexcept { return p_; }

 private:
  std::vector<double> p_{1.0};
};

// ---------------------------------------------------------------------------
// Gibbs states

inline double log_partition_function(const HarmonicHamiltonian& h, double beta) {
  double emin = h.energy(0);
  for (std::size_t i = 1; i < h.dim(); ++i) emin = std::min(emin, h.energy(i));
  double s = 0.0;
  for (std::size_t i = 0; i < h.dim(); ++i) s += std::exp(-beta * (h.energy(i) - emin));
  return -beta * emin + std::log(s);
}

inline ClassicalDistribution gibbs_distribution(const HarmonicHamiltonian& h, double beta) {
  if (!std::isfinite(beta) || beta < 0.0) throw Error("invalid_argument", "beta must be finite and nonnegative");
  double emin = h.energy(0);
  for (std::size_t i = 1; i < h.dim(); ++i) emin = std::min(emin, h.energy(i));
  std::vector<double> w(h.dim());
  for (std::size_t i = 0; i < h.dim(); ++i) w[i] = std::exp(-beta * (h.energy(i) - emin));
  return ClassicalDistribution::normalized(std::move(w));
}

/// e^{-beta H}/Z, computed with a ground-energy shift so large beta is safe.
inline DensityMatrix gibbs_state(const HarmonicHamiltonian& h, double beta) {
  const auto g = gibbs_distribution(h, beta);
  Matrix m = Matrix::Zero(Index(h.dim()), Index(h.dim()));
  for (std::size_t i = 0; i < h.dim(); ++i) m(Index(i), Index(i)) = g[i];
  return DensityMatrix(m, DensityMatrix::Unchecked{});
}

// ---------------------------------------------------------------------------
// Quantum relative entropy and free energy

/// S(rho||sigma) = Tr[rho ln rho - rho ln sigma]; +inf when the support of
/// rho is not contained in that of sigma (eigenvalue threshold 1e-10).
inline double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  require_same_dim(rho, sigma);
  const auto er = eigh(rho.matrix());
  const auto es = eigh(sigma.matrix());
  double s = 0.0;
  for (Index i = 0; i < er.values.size(); ++i) {
    const double p = er.values[i];
    if (p > 0.0) s += p * std::log(p);
  }
  const Matrix w = es.vectors.adjoint() * rho.matrix() * es.vectors;
  for (Index j = 0; j < es.values.size(); ++j) {
    const double q = es.values[j];
    const double wj = w(j, j).real();
    if (q <= tol::kSupport) {
      if (wj > tol::kSupport) return kInf;
      continue;
    }
    s -= wj * std::log(q);
  }
  return std::max(0.0, s);
}

/// F(rho) = S(rho || rho_Gibbs), dimensionless.
inline double free_energy(const DensityMatrix& rho, const HarmonicHamiltonian& h, double beta) {
  if (rho.dim() != h.dim()) throw Error("dimension_mismatch", "state and Hamiltonian dimensions differ");
  return relative_entropy(rho, gibbs_state(h, beta));
}

// ---------------------------------------------------------------------------
// Renyi divergences

namespace detail {
inline void require_same_size(const ClassicalDistribution& p, const ClassicalDistribution& q) {
  if (p.size() != q.size()) throw Error("dimension_mismatch", "distribution lengths differ");
}
inline double max_log_ratio(const ClassicalDistribution& num, const ClassicalDistribution& den) {
  double best = -kInf;
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (num[i] <= tol::kSupport) continue;
    if (den[i] <= tol::kSupport) return kInf;
    best = std::max(best, std::log(num[i]) - std::log(den[i]));
  }
  return best;
}
}  // namespace detail

/// S_alpha(p||q) = sgn(alpha)/(alpha-1) ln sum p^alpha q^(1-alpha), with the
/// limits at alpha in {0, 1, +inf, -inf}. alpha may be +/-infinity.
inline double renyi_divergence(const ClassicalDistribution& p, const ClassicalDistribution& q,
                               double alpha) {
  detail::require_same_size(p, q);
  if (std::isnan(alpha)) throw Error("nan_input", "alpha is NaN");
  if (alpha == kInf) return detail::max_log_ratio(p, q);
  if (alpha == -kInf) return detail::max_log_ratio(q, p);
  if (alpha == 1.0) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= tol::kSupport) continue;
      if (q[i] <= tol::kSupport) return kInf;
      s += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    return std::max(0.0, s);
  }
  if (alpha == 0.0) {
    double mass = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (p[i] > tol::kSupport) mass += q[i];
    return mass > 0.0 ? -std::log(mass) : kInf;
  }
  // log-sum-exp over the contributing terms.
  std::vector<double> logs;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pz = p[i] <= tol::kSupport, qz = q[i] <= tol::kSupport;
    if (pz && qz) continue;
    if (alpha < 0.0) {
      if (pz) return kInf;
      if (qz) continue;
    } else if (alpha > 1.0) {
      if (pz) continue;
      if (qz) return kInf;
    } else if (pz || qz) {
      continue;
    }
    logs.push_back(alpha * std::log(p[i]) + (1.0 - alpha) * std::log(q[i]));
  }
  if (logs.empty()) return kInf;
  const double m = *std::max_element(logs.begin(), logs.end());
  double s = 0.0;
  for (double l : logs) s += std::exp(l - m);
  const double result = (alpha > 0.0 ? 1.0 : -1.0) / (alpha - 1.0) * (m + std::log(s));
  if (std::isnan(result)) throw Error("nan_input", "Renyi divergence evaluated to NaN");
  return result;
}

/// F_alpha(p) = (S_alpha(p||p_Gibbs) - ln Z)/beta, in energy units.
inline double extended_free_energy(const ClassicalDistribution& p, const HarmonicHamiltonian& h,
                                   double beta, double alpha) {
  if (beta == 0.0) throw Error("invalid_argument", "infinite-temperature extended free energy undefined");
  if (p.size() != h.dim()) throw Error("dimension_mismatch", "distribution and Hamiltonian dimensions differ");
  return (renyi_divergence(p, gibbs_distribution(h, beta), alpha) - log_partition_function(h, beta)) / beta;
}

// ---------------------------------------------------------------------------
// Lorenz curves and thermomajorization

struct LorenzPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Piecewise-linear curve through cumulative (p, q) sums after sorting by
/// ascending p_i/q_i. Concave; starts at (0,0) and ends at (1,1).
class LorenzCurve {
 public:
  explicit LorenzCurve(std::vector<LorenzPoint> pts) : pts_(std::move(pts)) {}

  const std::vector<LorenzPoint>& breakpoints() const noexcept { return pts_; }

  /// Height at x; at a vertical segment the upper end is returned.
  double at(double x) const {
    if (x <= pts_.front().x) {
      double y = pts_.front().y;
      for (const auto& p : pts_)
        if (p.x <= x) y = std::max(y, p.y);
      return y;
    }
    for (std::size_t k = 1; k < pts_.size(); ++k) {
      const auto& a = pts_[k - 1];
      const auto& b = pts_[k];
      if (x <= b.x) {
        if (b.x == a.x) return b.y;
        return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
      }
    }
    return pts_.back().y;
  }

  bool is_concave(double tol = 1e-12) const {
    double prev = kInf;
    for (std::size_t k = 1; k < pts_.size(); ++k) {
      const double dx = pts_[k].x - pts_[k - 1].x;
      const double dy = pts_[k].y - pts_[k - 1].y;
      const double slope = dx > 0.0 ? dy / dx : kInf;
      if (slope > prev * (1.0 + tol) + tol) return false;
      prev = slope;
    }
    return true;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "x,y\n";
    for (const auto& p : pts_) os << p.x << ',' << p.y << '\n';
    return os.str();
  }

 private:
  std::vector<LorenzPoint> pts_;
};

inline LorenzCurve lorenz_curve(const ClassicalDistribution& p, const ClassicalDistribution& q) {
  detail::require_same_size(p, q);
  for (double x : q.probs())
    if (!(x > 0.0)) throw Error("invalid_distribution", "reference distribution must be strictly positive");
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  // p_a/q_a < p_b/q_b without division.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] * q[b] < p[b] * q[a]; });
  std::vector<LorenzPoint> pts{{0.0, 0.0}};
  double cx = 0.0, cy = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    cx += p[i];
    cy += q[i];
    const bool tie_with_next =
        k + 1 < order.size() &&
        std::abs(p[i] * q[order[k + 1]] - p[order[k + 1]] * q[i]) <=
            1e-12 * std::max(p[i] * q[order[k + 1]], p[order[k + 1]] * q[i]);
    if (!tie_with_next) pts.push_back({cx, cy});
  }
  pts.back() = {1.0, 1.0};
  return LorenzCurve(std::move(pts));
}

namespace detail {
inline std::vector<double> union_abscissae(const LorenzCurve& a, const LorenzCurve& b) {
  std::vector<double> xs;
  for (const auto& p : a.breakpoints()) xs.push_back(p.x);
  for (const auto& p : b.breakpoints()) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}
}  // namespace detail

/// True iff the Lorenz curve of (p, q) is nowhere below that of (p', q) by
/// more than tol, checked at the union of breakpoints.
inline bool thermomajorizes(const ClassicalDistribution& p, const ClassicalDistribution& p_prime,
                            const ClassicalDistribution& q, double tol = 1e-12) {
  const auto a = lorenz_curve(p, q);
  const auto b = lorenz_curve(p_prime, q);
  for (double x : detail::union_abscissae(a, b))
    if (a.at(x) < b.at(x) - tol) return false;
  return true;
}

/// Smallest gap curve(p) - curve(p') over the breakpoints where the curves
/// are not forced to coincide (interior abscissae, plus x = 0 when either
/// curve starts with a vertical segment). Zero when no such point exists.
inline double lorenz_margin(const ClassicalDistribution& p, const ClassicalDistribution& p_prime,
                            const ClassicalDistribution& q) {
  const auto a = lorenz_curve(p, q);
  const auto b = lorenz_curve(p_prime, q);
  double m = kInf;
  for (double x : detail::union_abscissae(a, b)) {
    if (x >= 1.0) continue;
    const double ya = a.at(x), yb = b.at(x);
    if (x <= 0.0 && ya == 0.0 && yb == 0.0) continue;
    m = std::min(m, ya - yb);
  }
  return m == kInf ? 0.0 : m;
}

}  // namespace cgpo
