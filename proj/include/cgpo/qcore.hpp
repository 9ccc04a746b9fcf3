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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cgpo {

inline constexpr const char* kVersion = "0.3.0";

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Library error carrying a machine-readable code ("budget_exceeded",
/// "dimension_mismatch", "invalid_state", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Tolerances shared across modules.
namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kEigenClip = 1e-10;
inline constexpr double kTrace = 1e-10;
inline constexpr double kSupport = 1e-10;
}  // namespace tol

namespace detail {
inline std::size_t initial_max_dim() {
  if (const char* env = std::getenv("CGPO_KIT_MAX_DIM")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 4096;
}
inline std::atomic<std::size_t>& max_dim_storage() {
  static std::atomic<std::size_t> value{initial_max_dim()};
  return value;
}
}  // namespace detail

/// Upper bound on any dense Hilbert-space dimension (default 4096, or
/// CGPO_KIT_MAX_DIM when set).
inline std::size_t max_total_dim() { return detail::max_dim_storage().load(); }
inline void set_max_total_dim(std::size_t n) { detail::max_dim_storage().store(n); }

inline void check_dim_budget(std::size_t dim, std::size_t budget = max_total_dim()) {
  if (dim > budget) {
    throw Error("budget_exceeded", "dimension budget exceeded: " + std::to_string(dim) +
                                       " > " + std::to_string(budget));
  }
}

inline std::size_t checked_product(std::size_t a, std::size_t b) {
  if (a != 0 && b > max_total_dim() * 64 / a) {
    throw Error("budget_exceeded", "dimension budget exceeded");
  }
  return a * b;
}

inline std::size_t int_pow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r = checked_product(r, base);
  return r;
}

// ---------------------------------------------------------------------------
// Hamiltonians

/// Diagonal Hamiltonian with energies E_i = levels[i] * delta.
///
/// Distinct levels must have coprime differences so that delta is the
/// largest common spacing; the period of every state is then 2*pi/delta.
class HarmonicHamiltonian {
 public:
  HarmonicHamiltonian() = default;
  HarmonicHamiltonian(double delta, std::vector<int> levels,
                      std::optional<double> beta = std::nullopt)
      : delta_(delta), levels_(std::move(levels)), beta_(beta) {
    if (!(delta_ > 0.0) || !std::isfinite(delta_)) {
      throw Error("invalid_hamiltonian", "delta must be positive and finite");
    }
    if (levels_.empty()) throw Error("invalid_hamiltonian", "empty level list");
    if (beta_ && !(*beta_ > 0.0)) throw Error("invalid_hamiltonian", "beta must be positive");
    int g = 0;
    for (int n : levels_) g = std::gcd(g, n - levels_.front());
    if (g > 1) {
      throw Error("invalid_hamiltonian",
                  "level differences share factor " + std::to_string(g) +
                      "; rescale delta so the spacing unit is maximal");
    }
  }

  /// All levels equal; used for classical label registers.
  static HarmonicHamiltonian trivial(std::size_t dim, double delta = 1.0) {
    return HarmonicHamiltonian(delta, std::vector<int>(dim, 0));
  }

  std::size_t dim() const noexcept { return levels_.size(); }
  double delta() const noexcept { return delta_; }
  const std::vector<int>& levels() const noexcept { return levels_; }
  std::optional<double> beta() const noexcept { return beta_; }
  double energy(std::size_t i) const { return levels_[i] * delta_; }
  double period() const noexcept { return 2.0 * std::numbers::pi / delta_; }
  bool is_trivial() const {
    return std::all_of(levels_.begin(), levels_.end(),
                       [&](int n) { return n == levels_.front(); });
  }
  int spread() const {
    auto [lo, hi] = std::minmax_element(levels_.begin(), levels_.end());
    return *hi - *lo;
  }

  friend bool operator==(const HarmonicHamiltonian& a, const HarmonicHamiltonian& b) {
    return a.delta_ == b.delta_ && a.levels_ == b.levels_;
  }

 private:
  double delta_ = 1.0;
  std::vector<int> levels_{0};
  std::optional<double> beta_;
};

/// H_a (x) 1 + 1 (x) H_b. Non-trivial factors must share delta.
inline HarmonicHamiltonian tensor(const HarmonicHamiltonian& a, const HarmonicHamiltonian& b) {
  double delta = a.delta();
  if (a.is_trivial()) {
    delta = b.delta();
  } else if (!b.is_trivial() && std::abs(a.delta() - b.delta()) > 1e-12 * a.delta()) {
    throw Error("invalid_hamiltonian", "cannot compose Hamiltonians with different spacings");
  }
  const std::size_t dim = checked_product(a.dim(), b.dim());
  check_dim_budget(dim);
  std::vector<int> levels;
  levels.reserve(dim);
  for (int x : a.levels())
    for (int y : b.levels()) levels.push_back(x + y);
  // Trivial-with-trivial keeps all-equal levels; otherwise gcd stays 1.
  return HarmonicHamiltonian(delta, std::move(levels), a.beta() ? a.beta() : b.beta());
}

inline HarmonicHamiltonian tensor_power(const HarmonicHamiltonian& h, int copies) {
  if (copies < 0) throw Error("invalid_argument", "negative copy count");
  if (copies == 0) return HarmonicHamiltonian(h.delta(), {0}, h.beta());
  HarmonicHamiltonian out = h;
  for (int i = 1; i < copies; ++i) out = tensor(out, h);
  return out;
}

// ---------------------------------------------------------------------------
// Density matrices

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

struct StateCheck {
  bool ok = true;
  std::string reason;
};

inline StateCheck check_state(const Matrix& m, double herm_tol = tol::kHermitian,
                              double eig_tol = tol::kEigenClip,
                              double trace_tol = tol::kTrace) {
  if (m.rows() != m.cols() || m.rows() == 0) return {false, "matrix is not square"};
  if (!m.allFinite()) return {false, "non-finite entries"};
  if (max_abs(m - m.adjoint()) > herm_tol) return {false, "not Hermitian"};
  if (std::abs(m.trace() - Complex(1.0)) > trace_tol) return {false, "trace is not 1"};
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -eig_tol) return {false, "negative eigenvalue"};
  return {};
}

/// Hermitian, PSD, unit-trace matrix.
class DensityMatrix {
 public:
  struct Unchecked {};

  DensityMatrix() : m_(Matrix::Ones(1, 1)) {}

  /// Validates the state invariants; throws Error("invalid_state") otherwise.
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    if (auto c = check_state(m_); !c.ok) throw Error("invalid_state", "invalid state: " + c.reason);
    m_ = hermitian_part(m_);
  }
  /// For results of trusted algebra; only Hermitian symmetrization is applied.
  DensityMatrix(Matrix m, Unchecked) : m_(hermitian_part(m)) {}

  static DensityMatrix pure(const ComplexVector& psi) {
    const ComplexVector v = psi / psi.norm();
    return DensityMatrix(v * v.adjoint(), Unchecked{});
  }
  static DensityMatrix diagonal(std::span<const double> p) {
    RealVector v(static_cast<Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) v[static_cast<Index>(i)] = p[i];
    return DensityMatrix(Matrix(v.cast<Complex>().asDiagonal()));
  }
  static DensityMatrix diagonal(std::initializer_list<double> p) {
    std::vector<double> v(p);
    return diagonal(std::span<const double>(v));
  }
  static DensityMatrix maximally_mixed(std::size_t d) {
    return DensityMatrix(Matrix::Identity(Index(d), Index(d)) / double(d), Unchecked{});
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  Complex operator()(Index i, Index j) const { return m_(i, j); }
  RealVector populations() const { return m_.diagonal().real(); }
  double purity() const { return m_.cwiseAbs2().sum(); }

 private:
  Matrix m_;
};

inline DensityMatrix plus_state() {
  ComplexVector v(2);
  v << 1.0, 1.0;
  return DensityMatrix::pure(v);
}

// ---------------------------------------------------------------------------
// Eigen helpers

struct HermitianEig {
  RealVector values;
  Matrix vectors;
};

inline HermitianEig eigh(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m));
  return {es.eigenvalues(), es.eigenvectors()};
}

/// f applied to the spectrum of a Hermitian matrix.
template <class F>
Matrix hermitian_function(const Matrix& m, F&& f) {
  const auto e = eigh(m);
  RealVector fv = e.values.unaryExpr(std::forward<F>(f));
  return e.vectors * fv.cast<Complex>().asDiagonal() * e.vectors.adjoint();
}

inline Matrix psd_sqrt(const Matrix& m) {
  return hermitian_function(m, [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
}

inline double trace_norm_hermitian(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------
// Composite systems

/// Ordered tensor factors of a composite system.
class CompositeLabel {
 public:
  struct Factor {
    std::string name;
    HarmonicHamiltonian hamiltonian;
    std::size_t dim() const { return hamiltonian.dim(); }
  };

  CompositeLabel() = default;
  explicit CompositeLabel(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::set<std::string> seen;
    for (const auto& f : factors_) {
      if (!seen.insert(f.name).second) throw Error("invalid_label", "duplicate subsystem " + f.name);
    }
  }

  /// n identical factors named prefix1..prefixN.
  static CompositeLabel copies(const HarmonicHamiltonian& h, int n, const std::string& prefix = "S") {
    std::vector<Factor> f;
    for (int i = 0; i < n; ++i) f.push_back({prefix + std::to_string(i + 1), h});
    return CompositeLabel(std::move(f));
  }

  const std::vector<Factor>& factors() const noexcept { return factors_; }
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d;
    for (const auto& f : factors_) d.push_back(f.dim());
    return d;
  }
  std::size_t total_dim() const {
    std::size_t d = 1;
    for (const auto& f : factors_) d = checked_product(d, f.dim());
    return d;
  }
  HarmonicHamiltonian hamiltonian() const {
    if (factors_.empty()) return HarmonicHamiltonian(1.0, {0});
    HarmonicHamiltonian h = factors_.front().hamiltonian;
    for (std::size_t i = 1; i < factors_.size(); ++i) h = tensor(h, factors_[i].hamiltonian);
    return h;
  }
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i].name == name) return i;
    throw Error("unknown_subsystem", "unknown subsystem: " + name);
  }

 private:
  std::vector<Factor> factors_;
};

// ---------------------------------------------------------------------------
// State operations

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  check_dim_budget(checked_product(a.dim(), b.dim()));
  return DensityMatrix(kron(a.matrix(), b.matrix()), DensityMatrix::Unchecked{});
}

inline DensityMatrix tensor_power(const DensityMatrix& rho, int copies) {
  if (copies < 0) throw Error("invalid_argument", "negative copy count");
  DensityMatrix out;
  for (int i = 0; i < copies; ++i) out = tensor(out, rho);
  return out;
}

/// Partial trace of an operator on prod(dims), keeping the listed factor
/// indices in their original order.
inline Matrix partial_trace(const Matrix& op, const std::vector<std::size_t>& dims,
                            const std::vector<std::size_t>& keep) {
  const std::size_t n = dims.size();
  std::vector<bool> kept(n, false);
  for (std::size_t k : keep) {
    if (k >= n) throw Error("unknown_subsystem", "subsystem index out of range");
    kept[k] = true;
  }
  std::size_t total = 1, dk = 1;
  for (std::size_t i = 0; i < n; ++i) {
    total *= dims[i];
    if (kept[i]) dk *= dims[i];
  }
  if (static_cast<std::size_t>(op.rows()) != total || op.rows() != op.cols()) {
    throw Error("dimension_mismatch", "operator does not match subsystem dimensions");
  }
  const std::size_t dt = total / dk;
  // Map (kept multi-index, traced multi-index) -> flat index.
  std::vector<std::size_t> flat(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t pos = 0; pos < total; ++pos) {
    std::size_t ki = 0, ti = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (kept[i]) ki = ki * dims[i] + digit[i];
      else ti = ti * dims[i] + digit[i];
    }
    flat[ki * dt + ti] = pos;
    for (std::size_t i = n; i-- > 0;) {
      if (++digit[i] < dims[i]) break;
      digit[i] = 0;
    }
  }
  Matrix out = Matrix::Zero(Index(dk), Index(dk));
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      Complex s = 0;
      for (std::size_t t = 0; t < dt; ++t) s += op(Index(flat[a * dt + t]), Index(flat[b * dt + t]));
      out(Index(a), Index(b)) = s;
    }
  return out;
}

/// Reorders tensor factors: factor q of the result is factor perm[q] of op.
inline Matrix permute_subsystems(const Matrix& op, const std::vector<std::size_t>& dims,
                                 const std::vector<std::size_t>& perm) {
  const std::size_t n = dims.size();
  if (perm.size() != n) throw Error("invalid_argument", "permutation size mismatch");
  std::vector<std::size_t> new_dims(n);
  for (std::size_t q = 0; q < n; ++q) new_dims[q] = dims.at(perm[q]);
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  if (static_cast<std::size_t>(op.rows()) != total) {
    throw Error("dimension_mismatch", "operator does not match subsystem dimensions");
  }
  // new flat index for every old flat index
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t pos = 0; pos < total; ++pos) {
    std::size_t idx = 0;
    for (std::size_t q = 0; q < n; ++q) idx = idx * new_dims[q] + digit[perm[q]];
    map[pos] = idx;
    for (std::size_t i = n; i-- > 0;) {
      if (++digit[i] < dims[i]) break;
      digit[i] = 0;
    }
  }
  Matrix out(op.rows(), op.cols());
  for (std::size_t a = 0; a < total; ++a)
    for (std::size_t b = 0; b < total; ++b) out(Index(map[a]), Index(map[b])) = op(Index(a), Index(b));
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& state, const CompositeLabel& label,
                                   const std::set<std::string>& keep) {
  if (keep.empty()) throw Error("invalid_argument", "keep set must be nonempty");
  if (label.total_dim() != state.dim()) {
    throw Error("dimension_mismatch", "label dimension does not match state");
  }
  std::vector<std::size_t> idx;
  for (const auto& name : keep) idx.push_back(label.index_of(name));
  std::sort(idx.begin(), idx.end());
  return DensityMatrix(partial_trace(state.matrix(), label.dims(), idx), DensityMatrix::Unchecked{});
}

/// Phase vector exp(-i E_k t) of a diagonal Hamiltonian.
inline ComplexVector evolution_phases(const HarmonicHamiltonian& h, double t) {
  ComplexVector u(Index(h.dim()));
  for (std::size_t k = 0; k < h.dim(); ++k) {
    u[Index(k)] = std::polar(1.0, -h.energy(k) * t);
  }
  return u;
}

/// e^{-iHt} A e^{iHt} for an arbitrary operator A.
inline Matrix time_evolve(const Matrix& op, const HarmonicHamiltonian& h, double t) {
  if (static_cast<std::size_t>(op.rows()) != h.dim()) {
    throw Error("dimension_mismatch", "Hamiltonian dimension does not match operator");
  }
  // Phase by integer level difference keeps the period exact.
  const double w = h.delta() * t;
  Matrix out(op.rows(), op.cols());
  for (Index i = 0; i < op.rows(); ++i)
    for (Index j = 0; j < op.cols(); ++j)
      out(i, j) = op(i, j) * std::polar(1.0, -w * (h.levels()[i] - h.levels()[j]));
  return out;
}

inline DensityMatrix time_evolve(const DensityMatrix& rho, const HarmonicHamiltonian& h, double t) {
  return DensityMatrix(time_evolve(rho.matrix(), h, t), DensityMatrix::Unchecked{});
}

inline void require_same_dim(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw Error("dimension_mismatch", "state dimensions differ");
}

/// |a - b|_1 (sum of absolute eigenvalues; not halved).
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_dim(a, b);
  return trace_norm_hermitian(a.matrix() - b.matrix());
}

/// Square-root fidelity Tr sqrt(sqrt(a) b sqrt(a)).
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_dim(a, b);
  const Matrix sa = psd_sqrt(a.matrix());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(sa * b.matrix() * sa),
                                           Eigen::EigenvaluesOnly);
  double f = 0.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) f += std::sqrt(std::max(0.0, es.eigenvalues()[i]));
  return std::clamp(f, 0.0, 1.0);
}

/// Bures distance sqrt(1 - F).
inline double bures_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return std::sqrt(std::max(0.0, 1.0 - fidelity(a, b)));
}

// ---------------------------------------------------------------------------
// Random instances (deterministic per engine state)

using Rng = std::mt19937_64;

inline Matrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = Complex(n(rng), n(rng));
  return g;
}

/// Random mixed state from the induced measure of the given rank.
inline DensityMatrix random_state(std::size_t dim, Rng& rng, std::size_t rank = 0) {
  if (rank == 0) rank = dim;
  const Matrix g = ginibre(Index(dim), Index(rank), rng);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m, DensityMatrix::Unchecked{});
}

inline DensityMatrix random_pure_state(std::size_t dim, Rng& rng) {
  return DensityMatrix::pure(ginibre(Index(dim), 1, rng).col(0));
}

inline Matrix random_hermitian(std::size_t dim, Rng& rng) {
  return hermitian_part(ginibre(Index(dim), Index(dim), rng));
}

}  // namespace cgpo
