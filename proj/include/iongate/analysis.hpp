#pragma once

// State and process metrics, gate/GHZ checks and the parameter-study harness.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iongate/synthesis.hpp"

namespace iongate {

enum class Keep { internal, motion };

// ---------------------------------------------------------------------------
// reduced states and fidelities
// ---------------------------------------------------------------------------

inline QuantumState partial_trace(const QuantumState& state, const Space& space, Keep keep) {
  if (state.layout() != Layout::composite || state.dim() != space.dim())
    throw DimensionError("partial_trace: state is not on the given composite space");
  const Eigen::Index di = space.internal_dim(), dm = space.motion_dim();
  const Matrix rho = state.density();
  if (keep == Keep::internal) {
    Matrix r = Matrix::Zero(di, di);
    for (Eigen::Index s = 0; s < di; ++s)
      for (Eigen::Index t = 0; t < di; ++t) r(s, t) = rho.block(s * dm, t * dm, dm, dm).trace();
    return QuantumState::mixed(Layout::internal_only, std::move(r));
  }
  Matrix r = Matrix::Zero(dm, dm);
  for (Eigen::Index s = 0; s < di; ++s) r += rho.block(s * dm, s * dm, dm, dm);
  return QuantumState::mixed(Layout::motion_only, std::move(r));
}

/// Hermitian PSD square root with negative eigenvalues clamped to 0.
inline Matrix psd_sqrt(const Matrix& a) {
  const Matrix h = 0.5 * (a + a.adjoint());
  return hermitian_function(h, [](double v) { return std::sqrt(std::max(v, 0.0)); });
}

/// |<psi|phi>|^2, <psi|rho|psi>, or the Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const QuantumState& a, const QuantumState& b) {
  if (a.layout() != b.layout() || a.dim() != b.dim())
    throw DimensionError("fidelity: states live on different spaces");
  if (a.is_pure() && b.is_pure()) return std::norm(a.vector().dot(b.vector()));
  if (a.is_pure()) return std::clamp((a.vector().adjoint() * b.matrix() * a.vector())(0).real(), 0.0, 1.0);
  if (b.is_pure()) return fidelity(b, a);
  const Matrix sa = psd_sqrt(a.matrix());
  const Matrix inner = sa * b.matrix() * sa;
  const Matrix root = psd_sqrt(inner);
  const double f = root.trace().real();
  return std::clamp(f * f, 0.0, 1.0);
}

/// |tr(ideal^dag actual)| / d; insensitive to a global phase.
inline double unitary_gate_fidelity(const OperatorMatrix& actual, const OperatorMatrix& ideal) {
  if (actual.dim() != ideal.dim()) throw DimensionError("unitary_gate_fidelity: dimension mismatch");
  return std::abs((ideal.mat.adjoint() * actual.mat).trace()) / static_cast<double>(actual.dim());
}

/// Largest deviation of a composite operator from the form W (x) 1 on Fock
/// blocks n, m <= n_limit: max of ||<n|U|n> - <0|U|0>|| and ||<n|U|m>|| (n != m).
inline double motional_independence_metric(const OperatorMatrix& u, const Space& space, int n_limit) {
  if (u.layout != Layout::composite || u.dim() != space.dim())
    throw DimensionError("motional_independence_metric: operator is not on the given space");
  if (n_limit < 0 || n_limit > space.n_max / 2)
    throw ValidationError("motional_independence_metric: n_limit must be in [0, n_max/2]");
  const Matrix v0 = motional_block(u.mat, space, 0, 0);
  double worst = 0.0;
  for (int n = 0; n <= n_limit; ++n)
    for (int m = 0; m <= n_limit; ++m) {
      const Matrix b = motional_block(u.mat, space, n, m);
      worst = std::max(worst, n == m ? max_abs_diff(b, v0) : b.cwiseAbs().maxCoeff());
    }
  return worst;
}

/// Population above Fock index n_max/2 of a motional density matrix.
inline double leakage(const QuantumState& motion) {
  if (motion.layout() != Layout::motion_only) throw DimensionError("leakage: expected a motional state");
  const Matrix rho = motion.density();
  const Eigen::Index n_max = rho.rows() - 1;
  double l = 0.0;
  for (Eigen::Index n = n_max / 2 + 1; n <= n_max; ++n) l += rho(n, n).real();
  return std::max(l, 0.0);
}

/// Entanglement fidelity of the reduced internal channel
/// rho -> tr_motion[U (rho (x) sigma) U^dag] against the unitary `ideal`.
/// Sensitive to relative phases between J_x sectors.
inline double channel_entanglement_fidelity(const OperatorMatrix& u, const Space& space,
                                            const OperatorMatrix& ideal, const QuantumState& motion) {
  if (u.dim() != space.dim() || ideal.dim() != space.internal_dim() ||
      motion.dim() != space.motion_dim())
    throw DimensionError("channel_entanglement_fidelity: dimension mismatch");
  const Eigen::Index di = space.internal_dim(), dm = space.motion_dim();
  std::vector<std::pair<double, Vector>> mix;
  if (motion.is_pure()) {
    mix.emplace_back(1.0, motion.vector());
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(motion.matrix());
    for (Eigen::Index k = 0; k < dm; ++k)
      if (es.eigenvalues()(k) > 1e-16) mix.emplace_back(es.eigenvalues()(k), es.eigenvectors().col(k));
  }
  const Matrix vdag = ideal.mat.adjoint();
  double f = 0.0;
  for (const auto& [p, vec] : mix) {
    // M = U (1 (x) |vec>), rows indexed by (s, j), columns by t
    Matrix lift = Matrix::Zero(space.dim(), di);
    for (Eigen::Index t = 0; t < di; ++t) lift.block(t * dm, t, dm, 1) = vec;
    const Matrix m = u.mat * lift;
    for (Eigen::Index j = 0; j < dm; ++j) {
      cplx tr = 0.0;
      for (Eigen::Index s = 0; s < di; ++s)
        for (Eigen::Index t = 0; t < di; ++t) tr += vdag(t, s) * m(s * dm + j, t);
      f += p * std::norm(tr);
    }
  }
  return f / static_cast<double>(di * di);
}

// ---------------------------------------------------------------------------
// gate and GHZ checks
// ---------------------------------------------------------------------------

/// Motional input description: a Fock state or a thermal state.
struct MotionSpec {
  enum class Kind { fock, thermal } kind = Kind::thermal;
  int fock = 0;
  double nbar = 0.0;

  static MotionSpec fock_state(int n) { return {Kind::fock, n, 0.0}; }
  static MotionSpec thermal(double nbar) { return {Kind::thermal, 0, nbar}; }
  std::string label() const {
    return kind == Kind::fock ? "fock(" + std::to_string(fock) + ")" : "thermal(" + std::to_string(nbar) + ")";
  }
};

struct PreparedMotion {
  QuantumState state;
  double tail_weight = 0.0;
};

inline PreparedMotion prepare_motion(const MotionSpec& m, int n_max) {
  if (m.kind == MotionSpec::Kind::fock) return {iongate::fock_state(n_max, m.fock), 0.0};
  ThermalState th = thermal_state({m.nbar, n_max});
  return {std::move(th.state), th.tail_weight};
}

/// Oracle propagator of the chosen model at t = tau.
inline OperatorMatrix oracle_at_tau(const ModelParams& p, Model model) {
  return expm_propagator(hamiltonian(p, model), p.period());
}

struct TruthTableRow {
  std::string input;           // e.g. "++"
  int expected_sign = 1;       // image is expected_sign * input
  double fidelity = 0.0;       // internal output vs the ideal image
  double motion_fidelity = 0.0;  // motional output vs motional input
  double leakage = 0.0;
};

struct GateCheck {
  ModelParams params;
  Model model = Model::lamb_dicke;
  MotionSpec motion;
  std::array<TruthTableRow, 4> rows;
  double entanglement_fidelity = 0.0;
  double truth_table_infidelity = 0.0;  // mean 1 - fidelity over the four inputs
  double gate_infidelity = 0.0;         // 1 - entanglement_fidelity
  double leakage = 0.0;                 // max over inputs
  double thermal_tail = 0.0;
  bool truncation_unreliable = false;
};

/// Runs the four |+->-product inputs through the two-ion gate with the given
/// motional input.
inline GateCheck gate_check(const ModelParams& p, Model model, const MotionSpec& motion,
                            const std::optional<OperatorMatrix>& precomputed = std::nullopt) {
  if (p.n_ions != 2) throw ValidationError("gate_check: the phase gate acts on two ions");
  const Space sp = Space::of(p);
  const OperatorMatrix u = precomputed ? *precomputed : oracle_at_tau(p, model);
  const PreparedMotion mot = prepare_motion(motion, p.n_max);
  const OperatorMatrix ideal = ideal_gate_unitary();

  GateCheck g;
  g.params = p;
  g.model = model;
  g.motion = motion;
  g.thermal_tail = mot.tail_weight;
  static constexpr std::array<const char*, 4> inputs{"++", "+-", "-+", "--"};
  double sum_inf = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const QuantumState in = plus_minus_product(inputs[i]);
    const QuantumState out = evolve(product_state(in, mot.state), u);
    const QuantumState expected = evolve(in, ideal);
    const QuantumState red_int = partial_trace(out, sp, Keep::internal);
    const QuantumState red_mot = partial_trace(out, sp, Keep::motion);
    TruthTableRow& row = g.rows[i];
    row.input = inputs[i];
    row.expected_sign = i == 0 ? -1 : 1;
    row.fidelity = fidelity(expected, red_int);
    row.motion_fidelity = fidelity(mot.state, red_mot);
    row.leakage = leakage(red_mot);
    sum_inf += 1.0 - row.fidelity;
    g.leakage = std::max(g.leakage, row.leakage);
  }
  g.truth_table_infidelity = sum_inf / 4.0;
  g.entanglement_fidelity = channel_entanglement_fidelity(u, sp, ideal, mot.state);
  g.gate_infidelity = std::max(0.0, 1.0 - g.entanglement_fidelity);
  g.truncation_unreliable = g.leakage > kTailWarning;
  return g;
}

struct GhzCheck {
  GhzRecipe recipe;
  Model model = Model::lamb_dicke;
  MotionSpec motion;
  double fidelity = 0.0;        // maximized over (phi_g, phi_e)
  double relative_phase = 0.0;  // phi_e - phi_g in [0, 2 pi)
  double leakage = 0.0;
  double thermal_tail = 0.0;
  bool truncation_unreliable = false;
  QuantumState internal_state = QuantumState::pure(Layout::internal_only, Vector::Ones(1));
};

/// Fidelity with (e^{i phi_g}|g..g> + e^{i phi_e}|e..e>)/sqrt2 maximized over
/// both phases, and the maximizing phi_e - phi_g.
inline std::pair<double, double> best_ghz_fidelity(const QuantumState& internal) {
  const Matrix rho = internal.density();
  const Eigen::Index d = rho.rows();
  const cplx coh = rho(d - 1, 0);
  const double f = 0.5 * (rho(0, 0).real() + rho(d - 1, d - 1).real()) + std::abs(coh);
  return {std::clamp(f, 0.0, 1.0), wrap_phase(std::arg(coh))};
}

inline GhzCheck ghz_check(const GhzRecipe& recipe, Model model, const MotionSpec& motion) {
  const ModelParams& p = recipe.params;
  const Space sp = Space::of(p);
  const OperatorMatrix u = oracle_at_tau(p, model);
  const PreparedMotion mot = prepare_motion(motion, p.n_max);
  const QuantumState out = evolve(product_state(all_ground(p.n_ions), mot.state), u);

  GhzCheck g;
  g.recipe = recipe;
  g.model = model;
  g.motion = motion;
  g.thermal_tail = mot.tail_weight;
  g.internal_state = partial_trace(out, sp, Keep::internal);
  std::tie(g.fidelity, g.relative_phase) = best_ghz_fidelity(g.internal_state);
  g.leakage = leakage(partial_trace(out, sp, Keep::motion));
  g.truncation_unreliable = g.leakage > kTailWarning;
  return g;
}

// ---------------------------------------------------------------------------
// Lamb-Dicke error sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  int n_ions = 2;
  int n_max = 40;
  int n_pad = 10;
  Model model = Model::full;
  std::uint64_t seed = 0;
};

struct SweepRecord {
  double eta = 0.0;
  double nbar = 0.0;
  int n_max = 0;
  ModelParams gate_params;
  ModelParams ghz_params;
  double infidelity_gate = 0.0;
  double infidelity_truth_table = 0.0;
  double infidelity_ghz = 0.0;
  double leakage = 0.0;
  std::vector<std::string> flags;
  std::string error;
  double runtime_s = 0.0;  // not serialized
};

struct SweepResult {
  std::vector<double> eta_grid;
  std::vector<double> nbar_grid;
  SweepOptions options;
  std::vector<SweepRecord> records;  // eta-major grid order
};

inline SweepRecord sweep_point(double eta, double nbar, const SweepOptions& opt) {
  SweepRecord rec;
  rec.eta = eta;
  rec.nbar = nbar;
  rec.n_max = opt.n_max;
  const auto start = std::chrono::steady_clock::now();
  try {
    const MotionSpec motion = MotionSpec::thermal(nbar);
    double tail = 0.0;
    if (opt.n_ions == 2) {
      rec.gate_params = solve_gate_params(eta).params(2, opt.n_max, opt.n_pad);
      const GateCheck g = gate_check(rec.gate_params, opt.model, motion);
      rec.infidelity_gate = g.gate_infidelity;
      rec.infidelity_truth_table = g.truth_table_infidelity;
      rec.leakage = g.leakage;
      tail = g.thermal_tail;
    }
    const GhzRecipe recipe = ghz_recipe(opt.n_ions, eta, opt.n_max, opt.n_pad);
    rec.ghz_params = recipe.params;
    const GhzCheck gh = ghz_check(recipe, opt.model, motion);
    rec.infidelity_ghz = std::max(0.0, 1.0 - gh.fidelity);
    rec.leakage = std::max(rec.leakage, gh.leakage);
    tail = std::max(tail, gh.thermal_tail);
    if (rec.leakage > kTailWarning) rec.flags.emplace_back("leakage");
    if (tail > kTailWarning) rec.flags.emplace_back("thermal_tail");
  } catch (const Error& e) {
    rec.error = e.what();
    rec.flags.emplace_back("error");
  }
  rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Gate and GHZ infidelity over an (eta, nbar) grid. Points are independent;
/// a failing point is recorded and the sweep continues.
inline SweepResult lamb_dicke_error_sweep(const std::vector<double>& eta_grid,
                                          const std::vector<double>& nbar_grid,
                                          const SweepOptions& opt = {}) {
  if (eta_grid.empty() || nbar_grid.empty()) throw ValidationError("sweep: grids must be nonempty");
  for (double e : eta_grid)
    if (!(e > 0.0)) throw ValidationError("sweep: eta values must be > 0");
  for (double n : nbar_grid)
    if (!(n >= 0.0)) throw ValidationError("sweep: nbar values must be >= 0");
  if (opt.n_ions < 2) throw ValidationError("sweep: n_ions must be >= 2");
  if (opt.n_max < 1 || opt.n_pad < 0) throw ValidationError("sweep: invalid cutoff");

  SweepResult res;
  res.eta_grid = eta_grid;
  res.nbar_grid = nbar_grid;
  res.options = opt;
  res.records.reserve(eta_grid.size() * nbar_grid.size());
  for (double eta : eta_grid)
    for (double nbar : nbar_grid) res.records.push_back(sweep_point(eta, nbar, opt));
  return res;
}

// ---------------------------------------------------------------------------
// truncation convergence
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  int n_max = 0;
  double gate_infidelity = 0.0;
  double independence_metric = 0.0;
  double tail_weight = 0.0;
  std::optional<double> d_gate_infidelity;  // change from the previous row
  std::optional<double> d_independence_metric;
};

/// Infidelity against the one-period prediction exp[i C J_x^2 - i D J_x] and
/// the motional-independence metric as the Fock cutoff grows.
/// The metric uses a common window n <= n_limit (default: smallest n_max / 3,
/// clear of the cutoff region) so rows are comparable.
inline std::vector<ConvergenceRow> truncation_convergence(const ModelParams& params, Model model,
                                                          const MotionSpec& motion,
                                                          const std::vector<int>& n_max_list,
                                                          std::optional<int> n_limit = std::nullopt) {
  if (n_max_list.empty()) throw ValidationError("truncation_convergence: empty n_max list");
  for (std::size_t i = 0; i < n_max_list.size(); ++i) {
    if (n_max_list[i] < 1) throw ValidationError("truncation_convergence: n_max must be >= 1");
    if (i > 0 && n_max_list[i] <= n_max_list[i - 1])
      throw ValidationError("truncation_convergence: n_max list must be strictly increasing");
  }
  const int window = n_limit.value_or(n_max_list.front() / 3);
  if (window < 0 || window > n_max_list.front() / 2)
    throw ValidationError("truncation_convergence: n_limit must be in [0, n_max/2]");

  const OperatorMatrix predicted = propagator_at_tau(params).internal;
  std::vector<ConvergenceRow> rows;
  for (int n_max : n_max_list) {
    ModelParams p = params;
    p.n_max = n_max;
    p.validate();
    const OperatorMatrix u = oracle_at_tau(p, model);
    const Space sp = Space::of(p);
    const PreparedMotion mot = prepare_motion(motion, n_max);
    ConvergenceRow row;
    row.n_max = n_max;
    row.tail_weight = mot.tail_weight;
    row.gate_infidelity = std::max(
        0.0, 1.0 - channel_entanglement_fidelity(u, sp, predicted, mot.state));
    row.independence_metric = motional_independence_metric(u, sp, window);
    if (!rows.empty()) {
      row.d_gate_infidelity = std::abs(row.gate_infidelity - rows.back().gate_infidelity);
      row.d_independence_metric = std::abs(row.independence_metric - rows.back().independence_metric);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace iongate
