#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace iongate {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for physically or structurally invalid inputs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// model parameters
// ---------------------------------------------------------------------------

/// Physical parameters of one standing-wave pulse. Frequencies are in units
/// of the trap frequency unless omega_a is set explicitly.
struct ModelParams {
  double eta = 0.1;          // Lamb-Dicke parameter
  double omega_a = 1.0;      // trap frequency
  double omega_ratio = 0.0;  // Rabi frequency over trap frequency
  double theta = 0.0;        // standing-wave offset angle [rad]
  double delta = 0.0;        // detuning in units of omega_a
  int n_ions = 2;
  int n_max = 40;  // Fock states |0>..|n_max>
  int n_pad = 10;  // extra Fock levels used for the operator sine

  double rabi() const { return omega_ratio * omega_a; }
  double detuning() const { return delta * omega_a; }
  double period() const { return 2.0 * pi / omega_a; }
  std::int64_t internal_dim() const { return std::int64_t{1} << n_ions; }
  std::int64_t motion_dim() const { return n_max + 1; }
  std::int64_t dim() const { return internal_dim() * motion_dim(); }

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta))
      throw ValidationError("eta must be positive and finite");
    if (!(omega_a > 0.0) || !std::isfinite(omega_a))
      throw ValidationError("omega_a must be positive and finite");
    if (!std::isfinite(omega_ratio) || !std::isfinite(theta) || !std::isfinite(delta))
      throw ValidationError("omega_ratio, theta and delta must be finite");
    if (n_ions < 1 || n_ions > 16) throw ValidationError("n_ions must be in [1, 16]");
    if (n_max < 1) throw ValidationError("n_max must be >= 1");
    if (n_pad < 0) throw ValidationError("n_pad must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// operators and states
// ---------------------------------------------------------------------------

enum class Layout { internal_only, motion_only, composite };

inline const char* to_string(Layout l) {
  switch (l) {
    case Layout::internal_only: return "internal-only";
    case Layout::motion_only: return "motion-only";
    case Layout::composite: return "composite";
  }
  return "?";
}

/// Dense square operator tagged with the factor space it acts on.
///
/// Composite index convention: index = s * (n_max + 1) + n, where s is the
/// internal basis index (ion 1 is the most significant bit, bit 0 = |g>,
/// bit 1 = |e>) and n is the Fock index.
struct OperatorMatrix {
  Layout layout = Layout::composite;
  Matrix mat;

  OperatorMatrix() = default;
  OperatorMatrix(Layout l, Matrix m) : layout(l), mat(std::move(m)) {
    if (mat.rows() != mat.cols()) throw DimensionError("operator matrix must be square");
  }

  Eigen::Index dim() const { return mat.rows(); }
  OperatorMatrix adjoint() const { return {layout, mat.adjoint()}; }
};

inline OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.layout != b.layout || a.dim() != b.dim())
    throw DimensionError("operator product: layout or dimension mismatch");
  return {a.layout, a.mat * b.mat};
}

/// Max-entry (elementwise) distance.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("max_abs_diff: shape mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

inline double hermiticity_error(const Matrix& a) { return max_abs_diff(a, a.adjoint()); }

/// Spectral norm of U^dagger U - 1.
inline double unitarity_error(const Matrix& u) {
  const Matrix g = u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

enum class StateKind { pure, mixed };

/// Pure state vector or density matrix on one of the layouts.
class QuantumState {
 public:
  static QuantumState pure(Layout layout, Vector psi) {
    QuantumState s;
    s.kind_ = StateKind::pure;
    s.layout_ = layout;
    s.psi_ = std::move(psi);
    return s;
  }
  static QuantumState mixed(Layout layout, Matrix rho) {
    if (rho.rows() != rho.cols()) throw DimensionError("density matrix must be square");
    QuantumState s;
    s.kind_ = StateKind::mixed;
    s.layout_ = layout;
    s.rho_ = std::move(rho);
    return s;
  }

  StateKind kind() const { return kind_; }
  Layout layout() const { return layout_; }
  bool is_pure() const { return kind_ == StateKind::pure; }
  Eigen::Index dim() const { return is_pure() ? psi_.size() : rho_.rows(); }

  const Vector& vector() const {
    if (!is_pure()) throw Error("state is mixed; no state vector");
    return psi_;
  }
  const Matrix& matrix() const {
    if (is_pure()) throw Error("state is pure; use density()");
    return rho_;
  }
  /// Density matrix in either representation.
  Matrix density() const { return is_pure() ? Matrix(psi_ * psi_.adjoint()) : rho_; }

  double trace() const { return is_pure() ? psi_.squaredNorm() : rho_.trace().real(); }

  /// Checks the normalization / positivity invariants.
  bool valid(double tol = 1e-12) const {
    if (is_pure()) return std::abs(psi_.norm() - 1.0) < tol;
    if (hermiticity_error(rho_) > tol) return false;
    if (std::abs(rho_.trace() - cplx(1.0)) > tol) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
  }

 private:
  QuantumState() = default;
  StateKind kind_ = StateKind::pure;
  Layout layout_ = Layout::composite;
  Vector psi_;
  Matrix rho_;
};

}  // namespace iongate
