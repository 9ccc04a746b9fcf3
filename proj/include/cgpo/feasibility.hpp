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
#include <optional>

#include "cgpo/channels.hpp"

namespace cgpo {

/// Linear structure imposed on the Choi matrix.
///  - general:   no restriction.
///  - covariant: cross-mode entries zero.
///  - classical: diagonal Choi matrix (a stochastic matrix on populations).
enum class Structure { general, covariant, classical };

inline const char* to_string(Structure s) {
  switch (s) {
    case Structure::general:
      return "general";
    case Structure::covariant:
      return "covariant";
    case Structure::classical:
      return "classical";
  }
  return "general";
}

struct FeasibilityProblem {
  DensityMatrix rho_in;
  DensityMatrix target;
  HarmonicHamiltonian h;
  std::optional<HarmonicHamiltonian> h_out;  // defaults to h
  double beta = 1.0;
  double epsilon = 0.0;  // Frobenius radius around target
  bool require_covariance = false;
  bool diagonal_only = false;
  int max_iters = 20000;
  double tol = 1e-8;

  const HarmonicHamiltonian& output_hamiltonian() const { return h_out ? *h_out : h; }
  Structure structure() const {
    if (diagonal_only) return Structure::classical;
    return require_covariance ? Structure::covariant : Structure::general;
  }
};

enum class FeasibilityStatus { found, not_found };

struct FeasibilityOutcome {
  FeasibilityStatus status = FeasibilityStatus::not_found;
  std::optional<QuantumChannel> channel;
  std::map<std::string, double> residuals;
  int iterations = 0;
  std::optional<bool> oracle;  // exact classical verdict when both states are diagonal

  bool found() const { return status == FeasibilityStatus::found; }
};

/// Exact classical convertibility under Gibbs-preserving stochastic maps.
inline bool blackwell_oracle(const ClassicalDistribution& p, const ClassicalDistribution& p_prime,
                             const HarmonicHamiltonian& h, double beta) {
  return thermomajorizes(p, p_prime, gibbs_distribution(h, beta));
}

inline bool blackwell_oracle(const DensityMatrix& p, const DensityMatrix& p_prime, const HarmonicHamiltonian& h,
                             double beta) {
  auto diag = [](const DensityMatrix& r) {
    if (max_abs(r.matrix() - Matrix(r.matrix().diagonal().asDiagonal())) > 1e-12) {
      throw Error("invalid_argument", "Blackwell oracle needs diagonal states");
    }
    return ClassicalDistribution::from_state(r);
  };
  return blackwell_oracle(diag(p), diag(p_prime), h, beta);
}

namespace detail {

/// Partition of Choi indices o*din+i such that allowed entries are exactly
/// the within-block pairs.
inline std::vector<std::vector<Index>> choi_blocks(const HarmonicHamiltonian& h_in, const HarmonicHamiltonian& h_out,
                                                   Structure s) {
  const Index din = Index(h_in.dim()), dout = Index(h_out.dim());
  std::vector<std::vector<Index>> blocks;
  if (s == Structure::general) {
    blocks.emplace_back();
    for (Index k = 0; k < din * dout; ++k) blocks.back().push_back(k);
    return blocks;
  }
  if (s == Structure::classical) {
    for (Index k = 0; k < din * dout; ++k) blocks.push_back({k});
    return blocks;
  }
  require_common_spacing(h_in, h_out);
  std::map<int, std::vector<Index>> by_mode;
  for (Index o = 0; o < dout; ++o)
    for (Index i = 0; i < din; ++i) by_mode[h_out.levels()[o] - h_in.levels()[i]].push_back(o * din + i);
  for (auto& [k, v] : by_mode) blocks.push_back(std::move(v));
  return blocks;
}

/// Solver state shared by the feasibility search and the random generator.
class ChoiProjector {
 public:
  ChoiProjector(const HarmonicHamiltonian& h_in, const HarmonicHamiltonian& h_out, double beta, Structure s,
                const Matrix* rho_in = nullptr, const Matrix* target = nullptr, bool pin_output = false)
      : din_(Index(h_in.dim())),
        dout_(Index(h_out.dim())),
        blocks_(choi_blocks(h_in, h_out, s)),
        g_in_(gibbs_state(h_in, beta).populations()),
        gamma_out_(gibbs_state(h_out, beta).matrix()) {
    check_dim_budget(std::size_t(din_ * dout_));
    mask_ = Matrix::Zero(din_ * dout_, din_ * dout_);
    for (const auto& b : blocks_)
      for (Index r : b)
        for (Index c : b) mask_(r, c) = 1.0;
    if (rho_in && target) {
      rho_ = *rho_in;
      target_ = *target;
      with_output_ = pin_output;
    }
    build_gram();
  }

  Index din() const { return din_; }
  Index dout() const { return dout_; }
  const Matrix& gamma_out() const { return gamma_out_; }

  /// Replace-with-Gibbs Choi matrix.
  Matrix gibbs_choi() const { return kron(gamma_out_, Matrix::Identity(din_, din_)); }

  Matrix mask(const Matrix& j) const { return j.cwiseProduct(mask_); }

  /// Projection onto PSD matrices supported on the allowed blocks.
  Matrix project_psd(const Matrix& j, double* neg = nullptr) const {
    Matrix out = Matrix::Zero(j.rows(), j.cols());
    double worst = 0.0;
    for (const auto& b : blocks_) {
      const Index n = Index(b.size());
      if (n == 1) {
        const double v = j(b[0], b[0]).real();
        worst = std::max(worst, -v);
        out(b[0], b[0]) = std::max(v, 0.0);
        continue;
      }
      Matrix sub(n, n);
      for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) sub(r, c) = j(b[r], b[c]);
      Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(sub));
      worst = std::max(worst, -es.eigenvalues().minCoeff());
      const RealVector clipped = es.eigenvalues().cwiseMax(0.0);
      sub = es.eigenvectors() * clipped.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
      for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) out(b[r], b[c]) = sub(r, c);
    }
    if (neg) *neg = worst;
    return out;
  }

  /// Smallest eigenvalue over the allowed blocks.
  double min_eigenvalue(const Matrix& j) const {
    double neg = 0.0;
    project_psd(j, &neg);
    return -neg;
  }

  /// Projection onto the allowed subspace intersected with
  /// {TP, Gibbs fixed point, and output = target when enabled}.
  Matrix project_affine(const Matrix& j) const {
    const Matrix x = mask(j);
    const ComplexVector y = gram_pinv_ * (constraint_map(x) - rhs());
    return hermitian_part(x - mask(constraint_adjoint(y)));
  }

  /// Output of the raw Choi matrix on rho_in.
  Matrix output(const Matrix& j) const { return apply_choi(j, din_, rho_); }
  const Matrix& target() const { return target_; }
  double rho_purity() const { return rho_.cwiseAbs2().sum(); }

  /// Projection onto {J : |J(rho) - target|_F <= eps}; exact because
  /// L L^* = Tr(rho^2) Id for the contraction L.
  Matrix project_ball(const Matrix& j, double eps) const {
    const Matrix r = output(j) - target_;
    const double nr = r.norm();
    if (nr <= eps) return j;
    const double scale = (1.0 - eps / nr) / rho_purity();
    return j - scale * kron(r, rho_.conjugate());
  }

  std::size_t constraint_count() const { return std::size_t(rhs().size()); }

 private:
  // Stacked constraints: [Tr_out J (din^2) | GP (dout^2) | output (dout^2)].
  ComplexVector constraint_map(const Matrix& j) const {
    const Index m = din_ * din_ + dout_ * dout_ * (with_output_ ? 2 : 1);
    ComplexVector v(m);
    Matrix tp = Matrix::Zero(din_, din_);
    for (Index o = 0; o < dout_; ++o) tp += j.block(o * din_, o * din_, din_, din_);
    Matrix gp(dout_, dout_);
    for (Index o = 0; o < dout_; ++o)
      for (Index p = 0; p < dout_; ++p) {
        Complex s = 0.0;
        for (Index i = 0; i < din_; ++i) s += g_in_[i] * j(o * din_ + i, p * din_ + i);
        gp(o, p) = s;
      }
    Index k = 0;
    for (Index c = 0; c < din_; ++c)
      for (Index r = 0; r < din_; ++r) v[k++] = tp(r, c);
    for (Index c = 0; c < dout_; ++c)
      for (Index r = 0; r < dout_; ++r) v[k++] = gp(r, c);
    if (with_output_) {
      const Matrix out = apply_choi(j, din_, rho_);
      for (Index c = 0; c < dout_; ++c)
        for (Index r = 0; r < dout_; ++r) v[k++] = out(r, c);
    }
    return v;
  }

  Matrix constraint_adjoint(const ComplexVector& y) const {
    Matrix tp(din_, din_), gp(dout_, dout_), out(dout_, dout_);
    Index k = 0;
    for (Index c = 0; c < din_; ++c)
      for (Index r = 0; r < din_; ++r) tp(r, c) = y[k++];
    for (Index c = 0; c < dout_; ++c)
      for (Index r = 0; r < dout_; ++r) gp(r, c) = y[k++];
    Matrix j = kron(Matrix::Identity(dout_, dout_), tp);
    j += kron(gp, Matrix(g_in_.cast<Complex>().asDiagonal()));
    if (with_output_) {
      for (Index c = 0; c < dout_; ++c)
        for (Index r = 0; r < dout_; ++r) out(r, c) = y[k++];
      j += kron(out, rho_.conjugate());
    }
    return j;
  }

  ComplexVector rhs() const {
    const Index m = din_ * din_ + dout_ * dout_ * (with_output_ ? 2 : 1);
    ComplexVector b = ComplexVector::Zero(m);
    Index k = 0;
    for (Index c = 0; c < din_; ++c)
      for (Index r = 0; r < din_; ++r) b[k++] = (r == c) ? 1.0 : 0.0;
    for (Index c = 0; c < dout_; ++c)
      for (Index r = 0; r < dout_; ++r) b[k++] = gamma_out_(r, c);
    if (with_output_)
      for (Index c = 0; c < dout_; ++c)
        for (Index r = 0; r < dout_; ++r) b[k++] = target_(r, c);
    return b;
  }

  void build_gram() {
    const Index m = din_ * din_ + dout_ * dout_ * (with_output_ ? 2 : 1);
    Matrix gram(m, m);
    ComplexVector e = ComplexVector::Zero(m);
    for (Index k = 0; k < m; ++k) {
      e[k] = 1.0;
      gram.col(k) = constraint_map(mask(constraint_adjoint(e)));
      e[k] = 0.0;
    }
    const auto es = eigh(gram);
    const double cut = 1e-10 * std::max(1.0, es.values.cwiseAbs().maxCoeff());
    RealVector inv(es.values.size());
    for (Index k = 0; k < inv.size(); ++k) inv[k] = es.values[k] > cut ? 1.0 / es.values[k] : 0.0;
    gram_pinv_ = es.vectors * inv.cast<Complex>().asDiagonal() * es.vectors.adjoint();
  }

  Index din_, dout_;
  std::vector<std::vector<Index>> blocks_;
  RealVector g_in_;
  Matrix gamma_out_;
  Matrix mask_;
  Matrix rho_, target_;
  bool with_output_ = false;
  Matrix gram_pinv_;
};

/// Mixes a candidate with the replace-with-Gibbs map just enough to remove
/// negative eigenvalues; TP, GP and the block structure are kept.
inline Matrix polish(const ChoiProjector& proj, const Matrix& j) {
  const double neg = std::max(0.0, -proj.min_eigenvalue(j));
  if (neg == 0.0) return j;
  const double floor = proj.gamma_out().diagonal().real().minCoeff();
  const double s = neg / (neg + floor);
  return (1.0 - s) * j + s * proj.gibbs_choi();
}

struct DykstraResult {
  Matrix choi;
  int iterations = 0;
  bool converged = false;
};

/// Dykstra cycle over (ball), PSD and the affine set; `accept` decides on
/// a polished candidate every few iterations.
template <class Accept>
DykstraResult dykstra(const ChoiProjector& proj, Matrix x, std::optional<double> ball, int max_iters,
                      Accept&& accept, int check_every = 25) {
  x = proj.project_affine(x);
  Matrix p_ball = Matrix::Zero(x.rows(), x.cols());
  Matrix p_psd = p_ball;
  DykstraResult res;
  for (int it = 0; it <= max_iters; ++it) {
    if (it % check_every == 0 || it == max_iters) {
      Matrix cand = polish(proj, x);
      if (accept(cand)) {
        res.choi = std::move(cand);
        res.iterations = it;
        res.converged = true;
        return res;
      }
      if (it == max_iters) break;
    }
    Matrix y = x;
    if (ball) {
      y = proj.project_ball(x + p_ball, *ball);
      p_ball = x + p_ball - y;
    }
    const Matrix z = proj.project_psd(y + p_psd);
    p_psd = y + p_psd - z;
    x = proj.project_affine(z);
  }
  res.choi = polish(proj, x);
  res.iterations = max_iters;
  return res;
}

inline bool is_diagonal(const DensityMatrix& r) {
  return max_abs(r.matrix() - Matrix(r.matrix().diagonal().asDiagonal())) <= 1e-14;
}
}  // namespace detail

/// Searches for a (covariant) Gibbs-preserving channel taking rho_in to
/// within epsilon (Frobenius) of target. not_found is not a proof of
/// infeasibility.
inline FeasibilityOutcome find_gpo(const FeasibilityProblem& prob) {
  const HarmonicHamiltonian& h_out = prob.output_hamiltonian();
  if (prob.rho_in.dim() != prob.h.dim() || prob.target.dim() != h_out.dim()) {
    throw Error("dimension_mismatch", "states do not match the Hamiltonians");
  }
  if (prob.epsilon < 0.0) throw Error("invalid_argument", "epsilon must be nonnegative");
  const Structure st = prob.structure();
  const bool exact = prob.epsilon == 0.0;
  const detail::ChoiProjector proj(prob.h, h_out, prob.beta, st, &prob.rho_in.matrix(), &prob.target.matrix(),
                                   exact);

  FeasibilityOutcome out;
  if (detail::is_diagonal(prob.rho_in) && detail::is_diagonal(prob.target) && prob.h == h_out) {
    out.oracle = blackwell_oracle(prob.rho_in, prob.target, prob.h, prob.beta);
  }
  // Candidates are judged by the independent checkers, never by the
  // solver's own residuals.
  auto accept = [&](const Matrix& j) {
    const QuantumChannel ch(j, prob.h, h_out, QuantumChannel::Unchecked{});
    const auto cptp = is_cptp(ch, prob.tol);
    const auto gp = is_gibbs_preserving(ch, prob.beta, prob.tol);
    const Matrix o = cgpo::apply(ch, prob.rho_in.matrix());
    const double dev = (o - prob.target.matrix()).norm();
    bool ok = cptp.pass && gp.pass && dev <= prob.epsilon + prob.tol;
    double cov = 0.0;
    if (st != Structure::general) {
      const auto c = is_covariant(ch, prob.tol);
      cov = c.violation;
      ok = ok && c.pass;
    }
    out.residuals = {{"cptp", cptp.violation},
                     {"gibbs", gp.violation},
                     {"covariance", cov},
                     {"output_frobenius", dev},
                     {"output_trace", trace_norm_hermitian(o - prob.target.matrix())}};
    return ok;
  };
  // The identity (restricted to the structure) is the other free candidate
  // besides the replace-with-Gibbs start point; when the target sits on the
  // boundary of the feasible set Dykstra only approaches it slowly.
  if (prob.h == h_out) {
    Matrix id = identity_channel(prob.h).choi();
    id = proj.mask(id);
    if (accept(id)) {
      out.status = FeasibilityStatus::found;
      out.channel.emplace(std::move(id), prob.h, h_out, QuantumChannel::Unchecked{});
      return out;
    }
  }
  std::optional<double> ball;
  if (!exact) ball = prob.epsilon;
  auto res = detail::dykstra(proj, proj.gibbs_choi(), ball, prob.max_iters, accept);
  out.iterations = res.iterations;
  if (res.converged) {
    out.status = FeasibilityStatus::found;
    out.channel.emplace(std::move(res.choi), prob.h, h_out, QuantumChannel::Unchecked{});
  }
  return out;
}

inline FeasibilityOutcome find_cgpo(FeasibilityProblem prob) {
  prob.require_covariance = true;
  return find_gpo(prob);
}

/// Smallest epsilon (to the given resolution) for which the search finds a
/// witness. The replace-with-Gibbs map bounds the search from above.
struct EpsilonSearch {
  double epsilon = 0.0;
  FeasibilityOutcome outcome;
};

inline EpsilonSearch minimal_epsilon(FeasibilityProblem prob, int steps = 20) {
  const Matrix gamma = gibbs_state(prob.output_hamiltonian(), prob.beta).matrix();
  double hi = (gamma - prob.target.matrix()).norm() + 1e-9;
  double lo = 0.0;
  prob.epsilon = hi;
  EpsilonSearch best{hi, find_gpo(prob)};
  prob.epsilon = 0.0;
  if (auto o = find_gpo(prob); o.found()) return {0.0, o};
  for (int s = 0; s < steps; ++s) {
    const double mid = 0.5 * (lo + hi);
    prob.epsilon = mid;
    auto o = find_gpo(prob);
    if (o.found()) {
      hi = mid;
      best = {mid, std::move(o)};
    } else {
      lo = mid;
    }
  }
  return best;
}

/// Random Gibbs-preserving channel: a random CPTP map pushed into the GP
/// set (intersected with the requested structure) by the same projections.
inline QuantumChannel random_gp_channel(const HarmonicHamiltonian& h, double beta, std::uint64_t seed,
                                        Structure structure = Structure::general, int max_iters = 20000,
                                        double tol = 1e-9) {
  Rng rng(seed);
  const QuantumChannel start = random_channel(h, h, rng);
  const detail::ChoiProjector proj(h, h, beta, structure);
  auto accept = [&](const Matrix& j) {
    const QuantumChannel ch(j, h, h, QuantumChannel::Unchecked{});
    const bool cov_ok = structure == Structure::general || is_covariant(ch, tol).pass;
    return cov_ok && is_cptp(ch, tol).pass && is_gibbs_preserving(ch, beta, tol).pass;
  };
  auto res = detail::dykstra(proj, proj.mask(start.choi()), std::nullopt, max_iters, accept, 10);
  if (!res.converged) throw Error("projection_failed", "random Gibbs-preserving channel did not converge");
  return QuantumChannel(std::move(res.choi), h, h, QuantumChannel::Unchecked{});
}

}  // namespace cgpo
