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

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks: index loops instead of reshapes,
// closed forms instead of eigendecompositions, hockey-stick functionals
// instead of Lorenz curves.

#include <unsupported/Eigen/MatrixFunctions>

#include "cgpo/cgpo.hpp"

namespace oracle {

using cgpo::Complex;
using cgpo::Index;
using cgpo::Matrix;

/// Kronecker product by explicit index arithmetic.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      for (Index k = 0; k < b.rows(); ++k)
        for (Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

/// Trace over one factor of a tripartite split dl x dm x dr, by direct
/// summation.
inline Matrix trace_middle(const Matrix& op, Index dl, Index dm, Index dr) {
  Matrix out = Matrix::Zero(dl * dr, dl * dr);
  for (Index a = 0; a < dl; ++a)
    for (Index b = 0; b < dl; ++b)
      for (Index c = 0; c < dr; ++c)
        for (Index d = 0; d < dr; ++d)
          for (Index m = 0; m < dm; ++m)
            out(a * dr + c, b * dr + d) += op((a * dm + m) * dr + c, (b * dm + m) * dr + d);
  return out;
}

/// Trace over all factors of n identical d-dimensional systems except `keep`.
inline Matrix single_marginal(const Matrix& op, Index d, int n, int keep) {
  Index left = 1, right = 1;
  for (int k = 0; k < keep; ++k) left *= d;
  for (int k = keep + 1; k < n; ++k) right *= d;
  Matrix out = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      for (Index l = 0; l < left; ++l)
        for (Index r = 0; r < right; ++r) out(i, j) += op((l * d + i) * right + r, (l * d + j) * right + r);
  return out;
}

/// e^{-iHt} rho e^{iHt} with the exponential from Eigen's matrix functions.
inline Matrix evolve(const Matrix& rho, const cgpo::HarmonicHamiltonian& h, double t) {
  Matrix hm = Matrix::Zero(Index(h.dim()), Index(h.dim()));
  for (std::size_t i = 0; i < h.dim(); ++i) hm(Index(i), Index(i)) = h.energy(i);
  const Matrix u = (Complex(0.0, -t) * hm).exp();
  return u * rho * u.adjoint();
}

/// Bloch vector of a qubit state.
inline Eigen::Vector3d bloch(const Matrix& rho) {
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

/// |rho - sigma|_1 for qubits: Euclidean distance of Bloch vectors.
inline double qubit_trace_distance(const Matrix& a, const Matrix& b) { return (bloch(a) - bloch(b)).norm(); }

/// Square-root fidelity for qubits from Tr and det.
inline double qubit_fidelity(const Matrix& a, const Matrix& b) {
  const double tr = (a * b).trace().real();
  const double da = std::max(0.0, a.determinant().real());
  const double db = std::max(0.0, b.determinant().real());
  return std::sqrt(std::max(0.0, tr + 2.0 * std::sqrt(da * db)));
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

/// sum_i max(p_i - t q_i, 0).
inline double hockey_stick(const std::vector<double>& p, const std::vector<double>& q, double t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::max(0.0, p[i] - t * q[i]);
  return s;
}

/// Thermomajorization through hockey-stick divergences: p > p' relative to q
/// iff E_t(p) >= E_t(p') for every t >= 0. Both sides are piecewise linear in
/// t with kinks at the ratios, so the ratios suffice.
inline bool thermomajorizes(const std::vector<double>& p, const std::vector<double>& pp, const std::vector<double>& q,
                            double tol = 1e-12) {
  std::vector<double> ts{0.0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    ts.push_back(p[i] / q[i]);
    ts.push_back(pp[i] / q[i]);
  }
  for (double t : ts)
    if (hockey_stick(p, q, t) < hockey_stick(pp, q, t) - tol) return false;
  return true;
}

/// Choi matrix of rho -> sum_k K rho K^dagger by explicit basis action.
inline Matrix choi_from_kraus(const std::vector<Matrix>& ks) {
  const Index din = ks.front().cols();
  const Index dout = ks.front().rows();
  Matrix j = Matrix::Zero(dout * din, dout * din);
  for (Index a = 0; a < din; ++a)
    for (Index b = 0; b < din; ++b) {
      Matrix e = Matrix::Zero(din, din);
      e(a, b) = 1.0;
      Matrix out = Matrix::Zero(dout, dout);
      for (const auto& k : ks) out += k * e * k.adjoint();
      for (Index o = 0; o < dout; ++o)
        for (Index p = 0; p < dout; ++p) j(o * din + a, p * din + b) = out(o, p);
    }
  return j;
}

/// Largest |entry| of op outside mode zero for levels `lv`.
inline double off_mode(const Matrix& op, const std::vector<int>& lv) {
  double m = 0.0;
  for (Index i = 0; i < op.rows(); ++i)
    for (Index j = 0; j < op.cols(); ++j)
      if (lv[std::size_t(i)] != lv[std::size_t(j)]) m = std::max(m, std::abs(op(i, j)));
  return m;
}

inline std::vector<double> random_simplex(std::size_t d, cgpo::Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(d);
  double s = 0.0;
  for (double& x : p) s += (x = e(rng));
  for (double& x : p) x /= s;
  return p;
}

}  // namespace oracle
