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

#include <functional>
#include <map>

#include "cgpo/thermo.hpp"

namespace cgpo {

// Choi convention, used everywhere in this library:
//
//   J = sum_{ij} E(|i><j|) (x) |i><j|        (output factor first)
//
// so J(o*d_in + i, o'*d_in + j) = <o|E(|i><j|)|o'>.

/// CPTP map stored in Choi form, with the Hamiltonians of its input and
/// output systems.
class QuantumChannel {
 public:
  struct Unchecked {};

  QuantumChannel(Matrix choi, HarmonicHamiltonian h_in, HarmonicHamiltonian h_out)
      : QuantumChannel(std::move(choi), std::move(h_in), std::move(h_out), Unchecked{}) {
    validate(1e-9);
  }
  QuantumChannel(Matrix choi, HarmonicHamiltonian h_in, HarmonicHamiltonian h_out, Unchecked)
      : choi_(hermitian_part(choi)), h_in_(std::move(h_in)), h_out_(std::move(h_out)) {
    const Index d = Index(dim_in() * dim_out());
    if (choi_.rows() != d || choi_.cols() != d) {
      throw Error("dimension_mismatch", "Choi matrix size does not match d_in*d_out");
    }
  }

  std::size_t dim_in() const noexcept { return h_in_.dim(); }
  std::size_t dim_out() const noexcept { return h_out_.dim(); }
  const Matrix& choi() const noexcept { return choi_; }
  const HarmonicHamiltonian& h_in() const noexcept { return h_in_; }
  const HarmonicHamiltonian& h_out() const noexcept { return h_out_; }

  /// Largest negative Choi eigenvalue magnitude and trace-preservation defect.
  std::pair<double, double> cptp_defects() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(choi_, Eigen::EigenvaluesOnly);
    const double neg = std::max(0.0, -es.eigenvalues().minCoeff());
    const double tp = max_abs(reduce_output(choi_) - Matrix::Identity(Index(dim_in()), Index(dim_in())));
    return {neg, tp};
  }

  /// Tr_out J.
  Matrix reduce_output(const Matrix& j) const {
    const Index din = Index(dim_in());
    Matrix t = Matrix::Zero(din, din);
    for (Index o = 0; o < Index(dim_out()); ++o) t += j.block(o * din, o * din, din, din);
    return t;
  }

 private:
  void validate(double tol) const {
    const auto [neg, tp] = cptp_defects();
    if (neg > tol) throw Error("not_cptp", "Choi matrix is not positive semidefinite");
    if (tp > tol) throw Error("not_cptp", "channel is not trace preserving");
  }

  Matrix choi_;
  HarmonicHamiltonian h_in_;
  HarmonicHamiltonian h_out_;
};

/// Contracts a raw Choi matrix with an input operator.
inline Matrix apply_choi(const Matrix& j, Index din, const Matrix& x) {
  if (x.rows() != din || x.cols() != din) throw Error("dimension_mismatch", "input dimension mismatch");
  const Index dout = j.rows() / din;
  Matrix out(dout, dout);
  for (Index o = 0; o < dout; ++o)
    for (Index p = 0; p < dout; ++p) out(o, p) = j.block(o * din, p * din, din, din).cwiseProduct(x).sum();
  return out;
}

/// E(X) for an arbitrary (not necessarily Hermitian) input operator.
inline Matrix apply(const QuantumChannel& ch, const Matrix& x) {
  return apply_choi(ch.choi(), Index(ch.dim_in()), x);
}

inline DensityMatrix apply(const QuantumChannel& ch, const DensityMatrix& rho) {
  return DensityMatrix(cgpo::apply(ch, rho.matrix()), DensityMatrix::Unchecked{});
}

/// Builds the Choi matrix of a linear map given as a function on operators.
inline Matrix choi_from_map(std::size_t din, std::size_t dout,
                            const std::function<Matrix(const Matrix&)>& map) {
  check_dim_budget(checked_product(din, dout));
  Matrix j = Matrix::Zero(Index(din * dout), Index(din * dout));
  Matrix e = Matrix::Zero(Index(din), Index(din));
  for (std::size_t a = 0; a < din; ++a)
    for (std::size_t b = 0; b < din; ++b) {
      e(Index(a), Index(b)) = 1.0;
      const Matrix y = map(e);
      e(Index(a), Index(b)) = 0.0;
      for (std::size_t o = 0; o < dout; ++o)
        for (std::size_t p = 0; p < dout; ++p)
          j(Index(o * din + a), Index(p * din + b)) = y(Index(o), Index(p));
    }
  return j;
}

inline QuantumChannel from_kraus(const std::vector<Matrix>& ops, const HarmonicHamiltonian& h_in,
                                 const HarmonicHamiltonian& h_out, double tol = 1e-9) {
  const Index din = Index(h_in.dim()), dout = Index(h_out.dim());
  if (ops.empty()) throw Error("incomplete_kraus", "empty Kraus set");
  Matrix completeness = Matrix::Zero(din, din);
  Matrix j = Matrix::Zero(din * dout, din * dout);
  for (const auto& k : ops) {
    if (k.rows() != dout || k.cols() != din) throw Error("dimension_mismatch", "Kraus operator has wrong shape");
    completeness += k.adjoint() * k;
    ComplexVector v(din * dout);
    for (Index o = 0; o < dout; ++o)
      for (Index i = 0; i < din; ++i) v[o * din + i] = k(o, i);
    j += v * v.adjoint();
  }
  if (max_abs(completeness - Matrix::Identity(din, din)) > tol) {
    throw Error("incomplete_kraus", "Kraus operators do not satisfy sum K^dagger K = I");
  }
  return QuantumChannel(j, h_in, h_out);
}

/// Canonical Kraus operators from the Choi spectrum (eigenvalues below
/// 1e-12 dropped).
inline std::vector<Matrix> to_kraus(const QuantumChannel& ch) {
  const auto e = eigh(ch.choi());
  const Index din = Index(ch.dim_in()), dout = Index(ch.dim_out());
  std::vector<Matrix> ops;
  for (Index k = 0; k < e.values.size(); ++k) {
    if (e.values[k] <= 1e-12) continue;
    Matrix op(dout, din);
    for (Index o = 0; o < dout; ++o)
      for (Index i = 0; i < din; ++i) op(o, i) = std::sqrt(e.values[k]) * e.vectors(o * din + i, k);
    ops.push_back(op);
  }
  return ops;
}

inline QuantumChannel identity_channel(const HarmonicHamiltonian& h) {
  return from_kraus({Matrix::Identity(Index(h.dim()), Index(h.dim()))}, h, h);
}

inline QuantumChannel unitary_channel(const Matrix& u, const HarmonicHamiltonian& h) {
  return from_kraus({u}, h, h);
}

/// X -> Tr(X) sigma.
inline QuantumChannel replacer_channel(const DensityMatrix& sigma, const HarmonicHamiltonian& h_in,
                                       const HarmonicHamiltonian& h_out) {
  if (sigma.dim() != h_out.dim()) throw Error("dimension_mismatch", "replacement state has wrong dimension");
  return QuantumChannel(kron(sigma.matrix(), Matrix::Identity(Index(h_in.dim()), Index(h_in.dim()))), h_in,
                        h_out);
}

/// T_t(X) = e^{-iHt} X e^{iHt}.
inline QuantumChannel phase_shift_channel(const HarmonicHamiltonian& h, double t) {
  const ComplexVector u = evolution_phases(h, t);
  return unitary_channel(Matrix(u.asDiagonal()), h);
}

/// a o b (b applied first).
inline QuantumChannel compose(const QuantumChannel& a, const QuantumChannel& b) {
  if (b.dim_out() != a.dim_in()) throw Error("dimension_mismatch", "cannot compose: dimension mismatch");
  return QuantumChannel(choi_from_map(b.dim_in(), a.dim_out(),
                                      [&](const Matrix& x) { return cgpo::apply(a, cgpo::apply(b, x)); }),
                        b.h_in(), a.h_out(), QuantumChannel::Unchecked{});
}

/// a (x) b acting on the composite (first factor a).
inline QuantumChannel tensor_channels(const QuantumChannel& a, const QuantumChannel& b) {
  const std::size_t ai = a.dim_in(), ao = a.dim_out(), bi = b.dim_in(), bo = b.dim_out();
  const std::size_t din = checked_product(ai, bi), dout = checked_product(ao, bo);
  check_dim_budget(checked_product(din, dout));
  Matrix j(Index(din * dout), Index(din * dout));
  const Matrix& ja = a.choi();
  const Matrix& jb = b.choi();
  auto row = [&](std::size_t oa, std::size_t ob, std::size_t ia, std::size_t ib) {
    return Index(((oa * bo + ob) * din) + ia * bi + ib);
  };
  for (std::size_t oa = 0; oa < ao; ++oa)
    for (std::size_t ia = 0; ia < ai; ++ia)
      for (std::size_t pa = 0; pa < ao; ++pa)
        for (std::size_t ja_ = 0; ja_ < ai; ++ja_) {
          const Complex va = ja(Index(oa * ai + ia), Index(pa * ai + ja_));
          for (std::size_t ob = 0; ob < bo; ++ob)
            for (std::size_t ib = 0; ib < bi; ++ib)
              for (std::size_t pb = 0; pb < bo; ++pb)
                for (std::size_t jb_ = 0; jb_ < bi; ++jb_)
                  j(row(oa, ob, ia, ib), row(pa, pb, ja_, jb_)) =
                      va * jb(Index(ob * bi + ib), Index(pb * bi + jb_));
        }
  return QuantumChannel(j, tensor(a.h_in(), b.h_in()), tensor(a.h_out(), b.h_out()),
                        QuantumChannel::Unchecked{});
}

inline QuantumChannel tensor_power(const QuantumChannel& ch, int copies) {
  if (copies < 1) throw Error("invalid_argument", "channel tensor power needs at least one copy");
  QuantumChannel out = ch;
  for (int i = 1; i < copies; ++i) out = tensor_channels(out, ch);
  return out;
}

// ---------------------------------------------------------------------------
// Property checks

struct ChannelReport {
  bool pass = false;
  double violation = 0.0;
  std::string witness;
};

inline ChannelReport is_cptp(const QuantumChannel& ch, double tol = 1e-9) {
  const auto [neg, tp] = ch.cptp_defects();
  ChannelReport r;
  r.violation = std::max(neg, tp);
  r.pass = r.violation <= tol;
  if (!r.pass) r.witness = neg >= tp ? "negative Choi eigenvalue" : "trace-preservation defect";
  return r;
}

/// Violation is |E(gamma_in) - gamma_out|_1.
inline ChannelReport is_gibbs_preserving(const QuantumChannel& ch, double beta, double tol = 1e-9) {
  const DensityMatrix out = cgpo::apply(ch, gibbs_state(ch.h_in(), beta));
  ChannelReport r;
  r.violation = trace_distance(out, gibbs_state(ch.h_out(), beta));
  r.pass = r.violation <= tol;
  if (!r.pass) r.witness = "output of Gibbs input differs from output Gibbs state";
  return r;
}

/// Coherence modes: block omega holds the entries (i,j) with n_i - n_j = omega.
/// Nonzero mode blocks only; a diagonal operator has just the 0 block.
struct ModeDecomposition {
  Index dim = 0;
  std::map<int, Matrix> modes;

  Matrix reconstruct() const {
    Matrix out = Matrix::Zero(dim, dim);
    for (const auto& [w, m] : modes) out += m;
    return out;
  }
};

inline ModeDecomposition mode_decompose(const Matrix& op, const HarmonicHamiltonian& h) {
  if (static_cast<std::size_t>(op.rows()) != h.dim() || op.rows() != op.cols()) {
    throw Error("dimension_mismatch", "operator does not match Hamiltonian");
  }
  ModeDecomposition d;
  d.dim = op.rows();
  const auto& n = h.levels();
  for (Index i = 0; i < op.rows(); ++i)
    for (Index j = 0; j < op.cols(); ++j) {
      if (op(i, j) == Complex(0.0)) continue;
      auto [it, inserted] = d.modes.try_emplace(n[i] - n[j]);
      if (inserted) it->second = Matrix::Zero(op.rows(), op.cols());
      it->second(i, j) = op(i, j);
    }
  return d;
}

/// Keeps only the mode-0 part of an operator.
inline Matrix dephase(const Matrix& op, const HarmonicHamiltonian& h) {
  Matrix out = op;
  for (Index i = 0; i < op.rows(); ++i)
    for (Index j = 0; j < op.cols(); ++j)
      if (h.levels()[i] != h.levels()[j]) out(i, j) = 0.0;
  return out;
}

inline DensityMatrix dephase(const DensityMatrix& rho, const HarmonicHamiltonian& h) {
  return DensityMatrix(dephase(rho.matrix(), h), DensityMatrix::Unchecked{});
}

inline bool is_incoherent(const DensityMatrix& rho, const HarmonicHamiltonian& h, double tol = 1e-9) {
  return max_abs(rho.matrix() - dephase(rho.matrix(), h)) <= tol;
}

namespace detail {
inline void require_common_spacing(const HarmonicHamiltonian& a, const HarmonicHamiltonian& b) {
  if (!a.is_trivial() && !b.is_trivial() && std::abs(a.delta() - b.delta()) > 1e-12 * a.delta()) {
    throw Error("invalid_hamiltonian", "covariance needs a common level spacing for input and output");
  }
}
}  // namespace detail

/// Choi entries allowed for a covariant channel:
/// n_out(o) - n_out(o') == n_in(i) - n_in(j).
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> covariance_mask(const HarmonicHamiltonian& h_in,
                                                                          const HarmonicHamiltonian& h_out) {
  detail::require_common_spacing(h_in, h_out);
  const Index din = Index(h_in.dim()), dout = Index(h_out.dim());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(din * dout, din * dout);
  const auto& ni = h_in.levels();
  const auto& no = h_out.levels();
  for (Index o = 0; o < dout; ++o)
    for (Index i = 0; i < din; ++i)
      for (Index p = 0; p < dout; ++p)
        for (Index j = 0; j < din; ++j) mask(o * din + i, p * din + j) = (no[o] - no[p]) == (ni[i] - ni[j]);
  return mask;
}

/// Structural covariance check: each input mode omega must map into output
/// mode omega; the violation is the largest off-mode Choi entry.
inline ChannelReport is_covariant(const QuantumChannel& ch, double tol = 1e-9) {
  const auto mask = covariance_mask(ch.h_in(), ch.h_out());
  const Index din = Index(ch.dim_in());
  ChannelReport r;
  Index wr = 0, wc = 0;
  for (Index a = 0; a < mask.rows(); ++a)
    for (Index b = 0; b < mask.cols(); ++b)
      if (!mask(a, b) && std::abs(ch.choi()(a, b)) > r.violation) {
        r.violation = std::abs(ch.choi()(a, b));
        wr = a;
        wc = b;
      }
  r.pass = r.violation <= tol;
  if (!r.pass) {
    r.witness = "input |" + std::to_string(wr % din) + "><" + std::to_string(wc % din) + "| leaks into output |" +
                std::to_string(wr / din) + "><" + std::to_string(wc / din) + "|";
  }
  return r;
}

/// Definitional check on the grid t_k = k*period/samples: the violation is
/// the largest Choi entry of T_t o E - E o T_t.
inline ChannelReport is_covariant_sampled(const QuantumChannel& ch, double tol = 1e-9, int samples = 64) {
  detail::require_common_spacing(ch.h_in(), ch.h_out());
  const double delta = ch.h_in().is_trivial() ? ch.h_out().delta() : ch.h_in().delta();
  const double period = 2.0 * std::numbers::pi / delta;
  const Index din = Index(ch.dim_in()), dout = Index(ch.dim_out());
  const auto& ni = ch.h_in().levels();
  const auto& no = ch.h_out().levels();
  ChannelReport r;
  for (int k = 1; k < samples; ++k) {
    const double w = delta * period * k / samples;
    for (Index o = 0; o < dout; ++o)
      for (Index i = 0; i < din; ++i)
        for (Index p = 0; p < dout; ++p)
          for (Index j = 0; j < din; ++j) {
            const Complex v = ch.choi()(o * din + i, p * din + j);
            const Complex d =
                v * (std::polar(1.0, -w * (no[o] - no[p])) - std::polar(1.0, -w * (ni[i] - ni[j])));
            r.violation = std::max(r.violation, std::abs(d));
          }
  }
  r.pass = r.violation <= tol;
  if (!r.pass) r.witness = "time-shift commutator nonzero";
  return r;
}

/// Group average over time translations; exact projection onto covariant
/// channels (zeroes cross-mode Choi entries).
inline QuantumChannel twirl(const QuantumChannel& ch) {
  const auto mask = covariance_mask(ch.h_in(), ch.h_out());
  Matrix j = ch.choi();
  for (Index a = 0; a < j.rows(); ++a)
    for (Index b = 0; b < j.cols(); ++b)
      if (!mask(a, b)) j(a, b) = 0.0;
  return QuantumChannel(j, ch.h_in(), ch.h_out(), QuantumChannel::Unchecked{});
}

inline QuantumChannel dephasing_channel(const HarmonicHamiltonian& h) { return twirl(identity_channel(h)); }

/// Random CPTP map: Ginibre Choi matrix rescaled to be trace preserving.
inline QuantumChannel random_channel(const HarmonicHamiltonian& h_in, const HarmonicHamiltonian& h_out, Rng& rng,
                                     std::size_t kraus_rank = 0) {
  const Index din = Index(h_in.dim()), dout = Index(h_out.dim());
  if (kraus_rank == 0) kraus_rank = std::size_t(din * dout);
  const Matrix g = ginibre(din * dout, Index(kraus_rank), rng);
  Matrix j = g * g.adjoint();
  Matrix t = Matrix::Zero(din, din);
  for (Index o = 0; o < dout; ++o) t += j.block(o * din, o * din, din, din);
  const Matrix s = hermitian_function(t, [](double x) { return 1.0 / std::sqrt(x); });
  const Matrix lift = kron(Matrix::Identity(dout, dout), s);
  return QuantumChannel(lift * j * lift, h_in, h_out);
}

}  // namespace cgpo
