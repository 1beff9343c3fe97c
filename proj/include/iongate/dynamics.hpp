#pragma once

// Hamiltonians of the standing-wave pulse and two routes to their propagator:
// a brute-force Hermitian eigendecomposition and the closed-form product of
// twist, free rotation, conditional displacement and carrier rotation.

#include <map>

#include <unsupported/Eigen/MatrixFunctions>

#include "iongate/hilbert.hpp"

namespace iongate {

/// H = w a^dag a + (Delta/2) J_z + Omega [eta (a + a^dag) cos(theta) + sin(theta)] J_x
inline OperatorMatrix hamiltonian_ld(const ModelParams& p) {
  p.validate();
  const Space sp = Space::of(p);
  const Ladder l = ladder_operators(p.n_max);
  const OperatorMatrix id_int = identity_internal(p.n_ions);
  const OperatorMatrix id_mot = identity_motion(p.n_max);

  const OperatorMatrix coupling{
      Layout::motion_only,
      p.eta * std::cos(p.theta) * (l.a.mat + l.a_dag.mat) + std::sin(p.theta) * id_mot.mat};

  Matrix h = p.omega_a * embed(sp, id_int, number_operator(p.n_max)).mat;
  if (p.delta != 0.0)
    h += 0.5 * p.detuning() * embed(sp, collective_spin(p.n_ions, Axis::z), id_mot).mat;
  h += p.rabi() * embed(sp, collective_spin(p.n_ions, Axis::x), coupling).mat;
  return {Layout::composite, std::move(h)};
}

/// H = w a^dag a + (Delta/2) J_z + Omega sin(eta (a + a^dag) + theta) J_x
inline OperatorMatrix hamiltonian_full(const ModelParams& p) {
  p.validate();
  const Space sp = Space::of(p);
  const OperatorMatrix id_mot = identity_motion(p.n_max);
  Matrix h = p.omega_a * embed(sp, identity_internal(p.n_ions), number_operator(p.n_max)).mat;
  if (p.delta != 0.0)
    h += 0.5 * p.detuning() * embed(sp, collective_spin(p.n_ions, Axis::z), id_mot).mat;
  h += p.rabi() * embed(sp, collective_spin(p.n_ions, Axis::x), position_sine_operator(p)).mat;
  return {Layout::composite, std::move(h)};
}

enum class Model { lamb_dicke, full };

inline const char* to_string(Model m) { return m == Model::full ? "full" : "lamb-dicke"; }

inline OperatorMatrix hamiltonian(const ModelParams& p, Model model) {
  return model == Model::full ? hamiltonian_full(p) : hamiltonian_ld(p);
}

/// exp(-i H t) via Hermitian eigendecomposition.
inline OperatorMatrix expm_propagator(const OperatorMatrix& h, double t) {
  const double scale = std::max(1.0, h.mat.cwiseAbs().maxCoeff());
  if (hermiticity_error(h.mat) > 1e-12 * scale)
    throw ValidationError("expm_propagator: Hamiltonian is not Hermitian");
  if (!std::isfinite(t)) throw ValidationError("expm_propagator: t must be finite");
  return {h.layout, hermitian_function(h.mat, [t](double e) { return std::exp(-I * e * t); })};
}

// ---------------------------------------------------------------------------
// closed form
// ---------------------------------------------------------------------------

struct PropagatorFactors {
  OperatorMatrix f_twist;    // exp[i Phi(t) J_x^2]
  OperatorMatrix f_rot;      // exp(-i w a^dag a t)
  OperatorMatrix f_disp;     // sum_m P_m (x) D(beta m)
  OperatorMatrix f_carrier;  // exp(-i Omega sin(theta) t J_x)
  OperatorMatrix product;    // f_twist f_rot f_disp f_carrier
  double t = 0.0;
  double twist_phase = 0.0;  // Phi(t)
  cplx beta{};               // displacement per unit J_x eigenvalue
};

/// Twist coefficient Phi(t) = lam^2 t / w - lam^2 sin(w t) / w^2, lam = eta Omega cos(theta).
inline double twist_phase(const ModelParams& p, double t) {
  const double lam = p.eta * p.rabi() * std::cos(p.theta);
  const double w = p.omega_a;
  return lam * lam * t / w - lam * lam * std::sin(w * t) / (w * w);
}

/// Motional displacement D(alpha) = exp(alpha a^dag - alpha^* a) on the
/// truncated space, by Pade scaling-and-squaring.
inline Matrix displacement_operator(int n_max, cplx alpha) {
  const Ladder l = ladder_operators(n_max);
  const Matrix gen = alpha * l.a_dag.mat - std::conj(alpha) * l.a.mat;
  return gen.exp();
}

inline PropagatorFactors closed_form_propagator(const ModelParams& p, double t) {
  p.validate();
  if (p.delta != 0.0)
    throw ValidationError("closed_form_propagator: only the resonant case (delta = 0) is supported");
  if (!std::isfinite(t)) throw ValidationError("closed_form_propagator: t must be finite");

  const Space sp = Space::of(p);
  const double w = p.omega_a;
  const double lam = p.eta * p.rabi() * std::cos(p.theta);
  const double carrier = p.rabi() * std::sin(p.theta);
  const OperatorMatrix id_int = identity_internal(p.n_ions);
  const OperatorMatrix id_mot = identity_motion(p.n_max);

  PropagatorFactors f;
  f.t = t;
  f.twist_phase = twist_phase(p, t);
  f.beta = -(lam / w) * (std::exp(I * (w * t)) - 1.0);

  const double phi = f.twist_phase;
  f.f_twist = embed(sp, jx_function(p.n_ions, [phi](int m) { return std::exp(I * (phi * m * m)); }),
                    id_mot);

  Vector rot(sp.motion_dim());
  for (Eigen::Index n = 0; n < rot.size(); ++n) rot(n) = std::exp(-I * (w * static_cast<double>(n) * t));
  f.f_rot = embed(sp, id_int, {Layout::motion_only, Matrix(rot.asDiagonal())});

  f.f_carrier = embed(
      sp, jx_function(p.n_ions, [carrier, t](int m) { return std::exp(-I * (carrier * t * m)); }),
      id_mot);

  // one displacement block per distinct J_x eigenvalue
  const JxEigenbasis eb = jx_eigenbasis(p.n_ions);
  std::map<int, Matrix> projectors;
  for (Eigen::Index k = 0; k < eb.vectors.cols(); ++k) {
    const int m = eb.m[static_cast<std::size_t>(k)];
    auto [it, inserted] = projectors.try_emplace(m, Matrix::Zero(sp.internal_dim(), sp.internal_dim()));
    it->second += eb.vectors.col(k) * eb.vectors.col(k).adjoint();
  }
  Matrix disp = Matrix::Zero(sp.dim(), sp.dim());
  for (const auto& [m, proj] : projectors)
    disp += kron(proj, displacement_operator(p.n_max, f.beta * static_cast<double>(m)));
  f.f_disp = {Layout::composite, std::move(disp)};

  f.product = f.f_twist * f.f_rot * f.f_disp * f.f_carrier;
  return f;
}

/// Propagator after one trap period tau = 2 pi / w: exp[i C J_x^2] exp[-i D J_x].
struct TauPropagator {
  OperatorMatrix internal;  // acts on the ions only
  OperatorMatrix composite;  // internal (x) motional identity
  double C = 0.0;            // 2 pi eta^2 Omega^2 cos^2(theta) / w^2
  double D = 0.0;            // 2 pi Omega sin(theta) / w
};

inline std::pair<double, double> tau_coefficients(double eta, double omega_ratio, double theta) {
  const double c = std::cos(theta);
  return {2.0 * pi * eta * eta * omega_ratio * omega_ratio * c * c,
          2.0 * pi * omega_ratio * std::sin(theta)};
}

inline TauPropagator propagator_at_tau(const ModelParams& p) {
  p.validate();
  if (p.delta != 0.0)
    throw ValidationError("propagator_at_tau: only the resonant case (delta = 0) is supported");
  TauPropagator out;
  std::tie(out.C, out.D) = tau_coefficients(p.eta, p.omega_ratio, p.theta);
  const double c = out.C, d = out.D;
  out.internal =
      jx_function(p.n_ions, [c, d](int m) { return std::exp(I * (c * m * m - d * m)); });
  out.composite = embed(Space::of(p), out.internal, identity_motion(p.n_max));
  return out;
}

/// Pure: U|psi>. Mixed: U rho U^dag.
inline QuantumState evolve(const QuantumState& state, const OperatorMatrix& u) {
  if (state.layout() != u.layout || state.dim() != u.dim())
    throw DimensionError("evolve: state and operator do not match");
  if (state.is_pure()) return QuantumState::pure(state.layout(), u.mat * state.vector());
  Matrix rho = u.mat * state.matrix() * u.mat.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return QuantumState::mixed(state.layout(), std::move(rho));
}

}  // namespace iongate
