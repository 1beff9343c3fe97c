#pragma once

// Composite Hilbert space of N two-level ions and one truncated motional mode.

#include <bit>
#include <cmath>
#include <string_view>
#include <vector>

#include "iongate/types.hpp"

namespace iongate {

/// Shape of the composite space.
struct Space {
  int n_ions = 1;
  int n_max = 1;

  static Space of(const ModelParams& p) { return {p.n_ions, p.n_max}; }
  Eigen::Index internal_dim() const { return Eigen::Index{1} << n_ions; }
  Eigen::Index motion_dim() const { return n_max + 1; }
  Eigen::Index dim() const { return internal_dim() * motion_dim(); }
  Eigen::Index index(Eigen::Index s, Eigen::Index n) const { return s * motion_dim() + n; }
};

// ---------------------------------------------------------------------------
// linear-algebra helpers
// ---------------------------------------------------------------------------

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// f(H) for Hermitian H through its eigendecomposition.
template <class F>
Matrix hermitian_function(const Matrix& h, F&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) throw Error("Hermitian eigendecomposition failed");
  const Eigen::VectorXd& w = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  Vector fw(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) fw(i) = cplx(f(w(i)));
  return v * fw.asDiagonal() * v.adjoint();
}

// ---------------------------------------------------------------------------
// basic operators
// ---------------------------------------------------------------------------

struct Ladder {
  OperatorMatrix a;
  OperatorMatrix a_dag;
};

/// Annihilation and creation operators on Fock states |0>..|n_max>.
inline Ladder ladder_operators(int n_max) {
  if (n_max < 1) throw ValidationError("ladder_operators: n_max must be >= 1");
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Matrix ad = a.adjoint();
  return {{Layout::motion_only, std::move(a)}, {Layout::motion_only, std::move(ad)}};
}

inline OperatorMatrix number_operator(int n_max) {
  if (n_max < 1) throw ValidationError("number_operator: n_max must be >= 1");
  Matrix n = Matrix::Zero(n_max + 1, n_max + 1);
  for (int k = 0; k <= n_max; ++k) n(k, k) = static_cast<double>(k);
  return {Layout::motion_only, std::move(n)};
}

enum class Axis { x, y, z };

/// Single-ion Pauli matrix in (g, e) ordering, eigenvalues +-1.
inline Eigen::Matrix2cd pauli(Axis axis) {
  Eigen::Matrix2cd s;
  switch (axis) {
    case Axis::x: s << 0, 1, 1, 0; break;
    case Axis::y: s << 0, I, -I, 0; break;  // sigma_y = -i|e><g| + i|g><e|
    case Axis::z: s << -1, 0, 0, 1; break;  // |e><e| - |g><g|
  }
  return s;
}

/// J_axis = sum_i sigma_axis^(i) on the internal space.
inline OperatorMatrix collective_spin(int n_ions, Axis axis) {
  if (n_ions < 1) throw ValidationError("collective_spin: n_ions must be >= 1");
  const Eigen::Index d = Eigen::Index{1} << n_ions;
  const Eigen::Matrix2cd s = pauli(axis);
  Matrix j = Matrix::Zero(d, d);
  for (int ion = 0; ion < n_ions; ++ion) {
    const int bit = n_ions - 1 - ion;  // ion 1 is the most significant bit
    for (Eigen::Index col = 0; col < d; ++col) {
      const int b = static_cast<int>((col >> bit) & 1);
      for (int b2 = 0; b2 < 2; ++b2) {
        const cplx v = s(b2, b);
        if (v == cplx(0.0)) continue;
        const Eigen::Index row = (col & ~(Eigen::Index{1} << bit)) | (Eigen::Index{b2} << bit);
        j(row, col) += v;
      }
    }
  }
  return {Layout::internal_only, std::move(j)};
}

/// Eigenbasis of J_x built from |+->-products: column k has ion i in |+> when
/// bit i of k is set (ion 1 most significant), eigenvalue 2*popcount(k) - N.
struct JxEigenbasis {
  Matrix vectors;
  std::vector<int> m;
};

inline JxEigenbasis jx_eigenbasis(int n_ions) {
  if (n_ions < 1) throw ValidationError("jx_eigenbasis: n_ions must be >= 1");
  const Eigen::Index d = Eigen::Index{1} << n_ions;
  const double h = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd single;
  single << -h, h, h, h;  // columns |->, |+> in (g, e) ordering
  Matrix w = Matrix::Ones(1, 1);
  for (int i = 0; i < n_ions; ++i) w = kron(w, Matrix(single));
  std::vector<int> m(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k)
    m[static_cast<std::size_t>(k)] = 2 * std::popcount(static_cast<unsigned long long>(k)) - n_ions;
  return {std::move(w), std::move(m)};
}

/// f(J_x) evaluated exactly on the integer spectrum.
template <class F>
OperatorMatrix jx_function(int n_ions, F&& f) {
  const JxEigenbasis eb = jx_eigenbasis(n_ions);
  Vector fm(eb.vectors.cols());
  for (Eigen::Index k = 0; k < fm.size(); ++k) fm(k) = cplx(f(eb.m[static_cast<std::size_t>(k)]));
  return {Layout::internal_only, eb.vectors * fm.asDiagonal() * eb.vectors.adjoint()};
}

// ---------------------------------------------------------------------------
// tensor-product assembly
// ---------------------------------------------------------------------------

inline OperatorMatrix embed(const OperatorMatrix& internal_op, const OperatorMatrix& motion_op) {
  if (internal_op.layout != Layout::internal_only)
    throw DimensionError("embed: first factor must be internal-only");
  if (motion_op.layout != Layout::motion_only)
    throw DimensionError("embed: second factor must be motion-only");
  const auto d = static_cast<unsigned long long>(internal_op.dim());
  if (!std::has_single_bit(d)) throw DimensionError("embed: internal dimension is not 2^N");
  return {Layout::composite, kron(internal_op.mat, motion_op.mat)};
}

/// embed() with the dimensions checked against a declared space.
inline OperatorMatrix embed(const Space& space, const OperatorMatrix& internal_op,
                            const OperatorMatrix& motion_op) {
  if (internal_op.dim() != space.internal_dim())
    throw DimensionError("embed: internal operator does not match n_ions");
  if (motion_op.dim() != space.motion_dim())
    throw DimensionError("embed: motional operator does not match n_max");
  return embed(internal_op, motion_op);
}

inline OperatorMatrix identity_internal(int n_ions) {
  const Eigen::Index d = Eigen::Index{1} << n_ions;
  return {Layout::internal_only, Matrix::Identity(d, d)};
}

inline OperatorMatrix identity_motion(int n_max) {
  return {Layout::motion_only, Matrix::Identity(n_max + 1, n_max + 1)};
}

/// Internal block <n|U|m> of a composite operator.
inline Matrix motional_block(const Matrix& u, const Space& space, Eigen::Index n, Eigen::Index m) {
  const Eigen::Index d = space.internal_dim();
  Matrix b(d, d);
  for (Eigen::Index s = 0; s < d; ++s)
    for (Eigen::Index t = 0; t < d; ++t) b(s, t) = u(space.index(s, n), space.index(t, m));
  return b;
}

/// Motional block <s|U|t> of a composite operator.
inline Matrix internal_block(const Matrix& u, const Space& space, Eigen::Index s, Eigen::Index t) {
  const Eigen::Index dm = space.motion_dim();
  return u.block(s * dm, t * dm, dm, dm);
}

// ---------------------------------------------------------------------------
// sin(eta (a + a^dag) + theta)
// ---------------------------------------------------------------------------

/// Built at cutoff n_max + n_pad through the Hermitian eigendecomposition of
/// the position quadrature, then truncated to n_max + 1 levels.
inline OperatorMatrix position_sine_operator(const ModelParams& params) {
  params.validate();
  const int padded = params.n_max + params.n_pad;
  const Ladder l = ladder_operators(padded);
  const Matrix x = params.eta * (l.a.mat + l.a_dag.mat) +
                   params.theta * Matrix::Identity(padded + 1, padded + 1);
  Matrix s = hermitian_function(x, [](double v) { return std::sin(v); });
  Matrix out = s.topLeftCorner(params.n_max + 1, params.n_max + 1);
  out = 0.5 * (out + out.adjoint()).eval();
  return {Layout::motion_only, std::move(out)};
}

// ---------------------------------------------------------------------------
// states
// ---------------------------------------------------------------------------

struct ThermalSpec {
  double nbar = 0.0;
  int n_max = 40;
};

struct ThermalState {
  QuantumState state;
  std::vector<double> populations;  // renormalized
  double tail_weight = 0.0;         // Boltzmann weight above n_max before renormalization
  bool tail_warning = false;        // tail_weight > 1e-6
};

inline constexpr double kTailWarning = 1e-6;

inline ThermalState thermal_state(const ThermalSpec& spec) {
  if (!(spec.nbar >= 0.0) || !std::isfinite(spec.nbar))
    throw ValidationError("thermal_state: nbar must be >= 0");
  if (spec.n_max < 1) throw ValidationError("thermal_state: n_max must be >= 1");
  const double q = spec.nbar / (1.0 + spec.nbar);
  std::vector<double> p(static_cast<std::size_t>(spec.n_max + 1));
  double qn = 1.0;
  double kept = 0.0;
  for (auto& pn : p) {
    pn = qn / (1.0 + spec.nbar);
    kept += pn;
    qn *= q;
  }
  // the discarded geometric tail sums to q^(n_max+1)
  const double tail = std::pow(q, spec.n_max + 1);
  Matrix rho = Matrix::Zero(spec.n_max + 1, spec.n_max + 1);
  for (std::size_t n = 0; n < p.size(); ++n) {
    p[n] /= kept;
    rho(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = p[n];
  }
  return {QuantumState::mixed(Layout::motion_only, std::move(rho)), std::move(p), tail,
          tail > kTailWarning};
}

inline QuantumState fock_state(int n_max, int n) {
  if (n < 0 || n > n_max) throw ValidationError("fock_state: n outside [0, n_max]");
  Vector v = Vector::Zero(n_max + 1);
  v(n) = 1.0;
  return QuantumState::pure(Layout::motion_only, std::move(v));
}

inline QuantumState all_ground(int n_ions) {
  Vector v = Vector::Zero(Eigen::Index{1} << n_ions);
  v(0) = 1.0;
  return QuantumState::pure(Layout::internal_only, std::move(v));
}

inline QuantumState all_excited(int n_ions) {
  const Eigen::Index d = Eigen::Index{1} << n_ions;
  Vector v = Vector::Zero(d);
  v(d - 1) = 1.0;
  return QuantumState::pure(Layout::internal_only, std::move(v));
}

/// Product of |+> = (|e>+|g>)/sqrt2 and |-> = (|e>-|g>)/sqrt2, e.g. "+-".
inline QuantumState plus_minus_product(std::string_view signs) {
  if (signs.empty()) throw ValidationError("plus_minus_product: empty sign string");
  const double h = 1.0 / std::sqrt(2.0);
  Vector v = Vector::Ones(1);
  for (char c : signs) {
    Vector single(2);
    if (c == '+')
      single << h, h;
    else if (c == '-')
      single << -h, h;
    else
      throw ValidationError("plus_minus_product: expected '+' or '-'");
    v = kron(v, single);
  }
  return QuantumState::pure(Layout::internal_only, std::move(v));
}

/// internal (x) motion; pure only if both factors are pure.
inline QuantumState product_state(const QuantumState& internal, const QuantumState& motion) {
  if (internal.layout() != Layout::internal_only || motion.layout() != Layout::motion_only)
    throw DimensionError("product_state: expected internal-only and motion-only factors");
  if (internal.is_pure() && motion.is_pure())
    return QuantumState::pure(Layout::composite, kron(internal.vector(), motion.vector()));
  return QuantumState::mixed(Layout::composite, kron(internal.density(), motion.density()));
}

}  // namespace iongate
