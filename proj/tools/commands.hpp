#pragma once

// Command implementations shared by the iongate CLI and its tests. Every
// command returns a JSON document (the machine output) and a text rendering.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iongate/analysis.hpp"

namespace iongate::cli {

using nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;

struct Report {
  ordered_json json;
  std::string text;
};

/// %.17g rendering used for CSV and text output.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline ordered_json to_json(const ModelParams& p) {
  return {{"eta", p.eta},         {"omega_a", p.omega_a}, {"omega_ratio", p.omega_ratio},
          {"theta", p.theta},     {"delta", p.delta},     {"n_ions", p.n_ions},
          {"n_max", p.n_max},     {"n_pad", p.n_pad}};
}

inline ordered_json to_json(const GateSolution& s) {
  return {{"eta", s.eta},
          {"theta", s.theta},
          {"sin_theta", std::sin(s.theta)},
          {"omega_ratio", s.omega_ratio},
          {"achieved_C", s.achieved_C},
          {"achieved_D", s.achieved_D},
          {"residual_C", s.residual_C},
          {"residual_D", s.residual_D},
          {"k1", s.k1},
          {"k2", s.k2},
          {"target_distance", s.target_distance}};
}

inline ordered_json to_json(const MotionSpec& m) {
  if (m.kind == MotionSpec::Kind::fock) return {{"kind", "fock"}, {"n", m.fock}};
  return {{"kind", "thermal"}, {"nbar", m.nbar}};
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

inline std::string solution_text(const std::string& label, const GateSolution& s) {
  std::ostringstream o;
  o << label << ": theta=" << fmt17(s.theta) << " sin(theta)=" << fmt17(std::sin(s.theta))
    << " omega_ratio=" << fmt17(s.omega_ratio) << "\n"
    << "  achieved C=" << fmt17(s.achieved_C) << " (target pi/8=" << fmt17(kTargetTwist) << ")"
    << "  -D=" << fmt17(-s.achieved_D) << " (target pi/4=" << fmt17(kTargetCarrier) << ")\n"
    << "  residual_C=" << fmt6(s.residual_C) << " residual_D=" << fmt6(s.residual_D)
    << " target_distance=" << fmt6(s.target_distance) << "\n";
  return o.str();
}

/// Throws ConvergenceError when the solver fails.
inline Report run_solve(double eta, bool paper_eq6) {
  if (!(eta > 0.0)) throw ValidationError("--eta must be > 0");
  const GateSolution s = solve_gate_params(eta);
  Report r;
  r.json = {{"command", "solve"}, {"eta", eta}, {"solution", to_json(s)}};
  r.text = solution_text("solved (k1=k2=0)", s);
  if (paper_eq6) {
    const GateSolution e = paper_eq6_params(eta);
    r.json["paper_eq6"] = to_json(e);
    r.json["paper_eq6"]["matches_target"] = e.residual_C < 1e-10 && e.residual_D < 1e-10;
    r.text += solution_text("literal closed-form choice", e);
    r.text += "  -> achieves C=pi^2/8, -D=pi^2/4 instead of the gate target\n";
  }
  return r;
}

// ---------------------------------------------------------------------------
// gate-check
// ---------------------------------------------------------------------------

struct GateCheckConfig {
  double eta = 0.1;
  double nbar = 2.0;
  int n_max = 40;
  int n_pad = 10;
  Model model = Model::lamb_dicke;
};

inline Report run_gate_check(const GateCheckConfig& c) {
  if (!(c.nbar >= 0.0)) throw ValidationError("--nbar must be >= 0");
  const GateSolution s = solve_gate_params(c.eta);
  ModelParams p = s.params(2, c.n_max, c.n_pad);
  p.validate();
  const GateCheck g = gate_check(p, c.model, MotionSpec::thermal(c.nbar));

  Report r;
  ordered_json rows = ordered_json::array();
  std::ostringstream o;
  o << "phase gate check (" << to_string(c.model) << ", nbar=" << fmt6(c.nbar) << ", n_max=" << c.n_max
    << ")\n";
  o << "  input  sign  fidelity             motion_fidelity      leakage\n";
  for (const TruthTableRow& row : g.rows) {
    rows.push_back({{"input", row.input},
                    {"expected_sign", row.expected_sign},
                    {"fidelity", row.fidelity},
                    {"motion_fidelity", row.motion_fidelity},
                    {"leakage", row.leakage}});
    o << "  |" << row.input << ">  " << (row.expected_sign < 0 ? "-1" : "+1") << "    "
      << fmt17(row.fidelity) << "  " << fmt17(row.motion_fidelity) << "  " << fmt6(row.leakage) << "\n";
  }
  ordered_json flags = ordered_json::array();
  if (g.truncation_unreliable) flags.push_back("truncation_unreliable");
  if (g.thermal_tail > kTailWarning) flags.push_back("thermal_tail");
  r.json = {{"command", "gate-check"},
            {"model", to_string(c.model)},
            {"params", to_json(p)},
            {"motion", to_json(g.motion)},
            {"rows", rows},
            {"entanglement_fidelity", g.entanglement_fidelity},
            {"gate_infidelity", g.gate_infidelity},
            {"truth_table_infidelity", g.truth_table_infidelity},
            {"leakage", g.leakage},
            {"thermal_tail", g.thermal_tail},
            {"flags", flags}};
  o << "  gate infidelity (1 - entanglement fidelity): " << fmt6(g.gate_infidelity) << "\n";
  o << "  truth-table infidelity: " << fmt6(g.truth_table_infidelity) << "\n";
  if (g.truncation_unreliable) o << "  WARNING: leakage above n_max/2 exceeds 1e-6; raise --n-max\n";
  if (g.thermal_tail > kTailWarning)
    o << "  WARNING: thermal tail beyond n_max is " << fmt6(g.thermal_tail) << "\n";
  r.text = o.str();
  return r;
}

// ---------------------------------------------------------------------------
// ghz
// ---------------------------------------------------------------------------

struct GhzConfig {
  int n_ions = 2;
  double eta = 0.1;
  double nbar = 2.0;
  int n_max = 40;
  int n_pad = 10;
  Model model = Model::lamb_dicke;
  bool allow_large = false;
};

inline Report run_ghz(const GhzConfig& c) {
  if (c.n_ions < 2) throw ValidationError("--n-ions must be >= 2");
  if (c.n_ions > 6 && !c.allow_large)
    throw ValidationError("--n-ions above 6 needs --allow-large");
  if (!(c.nbar >= 0.0)) throw ValidationError("--nbar must be >= 0");
  const GhzRecipe recipe = ghz_recipe(c.n_ions, c.eta, c.n_max, c.n_pad);
  const GhzCheck g = ghz_check(recipe, c.model, MotionSpec::thermal(c.nbar));

  ordered_json flags = ordered_json::array();
  if (g.truncation_unreliable) flags.push_back("truncation_unreliable");
  if (g.thermal_tail > kTailWarning) flags.push_back("thermal_tail");
  Report r;
  r.json = {{"command", "ghz"},
            {"model", to_string(c.model)},
            {"recipe", c.n_ions % 2 == 0 ? "even" : "odd"},
            {"params", to_json(recipe.params)},
            {"motion", to_json(g.motion)},
            {"fidelity", g.fidelity},
            {"infidelity", std::max(0.0, 1.0 - g.fidelity)},
            {"phi_g", 0.0},
            {"phi_e", g.relative_phase},
            {"relative_phase", g.relative_phase},
            {"leakage", g.leakage},
            {"thermal_tail", g.thermal_tail},
            {"flags", flags}};
  std::ostringstream o;
  o << "GHZ generation, N=" << c.n_ions << " (" << (c.n_ions % 2 == 0 ? "even" : "odd")
    << " recipe, " << to_string(c.model) << ", nbar=" << fmt6(c.nbar) << ", n_max=" << c.n_max << ")\n"
    << "  theta=" << fmt17(recipe.params.theta) << " omega_ratio=" << fmt17(recipe.params.omega_ratio)
    << "\n"
    << "  fidelity (phase-maximized) = " << fmt17(g.fidelity) << "\n"
    << "  phi_e - phi_g = " << fmt17(g.relative_phase) << " rad (phi_g fixed to 0)\n";
  if (recipe.expected_relative_phase) {
    const double exp_phase = *recipe.expected_relative_phase;
    const double diff = std::abs(std::remainder(g.relative_phase - exp_phase, 2.0 * pi));
    r.json["expected_relative_phase"] = exp_phase;
    r.json["relative_phase_error"] = diff;
    o << "  literature value pi/2 + N pi/2 = " << fmt17(exp_phase) << " rad, difference "
      << fmt6(diff) << " rad\n";
  }
  if (g.truncation_unreliable) o << "  WARNING: leakage above n_max/2 exceeds 1e-6; raise --n-max\n";
  r.text = o.str();
  return r;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
  SweepOptions options;
  std::vector<double> eta_grid;
  std::vector<double> nbar_grid;
  std::string csv_path;
  std::string json_path;
};

namespace detail {

inline void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const ordered_json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("invalid value for '") + key + "'");
  }
}

}  // namespace detail

/// Parses {model, grids, output}; unknown keys and invalid values are errors.
inline SweepConfig parse_sweep_config(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  detail::reject_unknown(doc, {"model", "grids", "output"}, "config");
  SweepConfig c;
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    detail::reject_unknown(m, {"n_ions", "n_max", "n_pad", "hamiltonian", "seed"}, "model");
    c.options.n_ions = detail::get_or(m, "n_ions", c.options.n_ions);
    c.options.n_max = detail::get_or(m, "n_max", c.options.n_max);
    c.options.n_pad = detail::get_or(m, "n_pad", c.options.n_pad);
    c.options.seed = detail::get_or<std::uint64_t>(m, "seed", c.options.seed);
    const std::string h = detail::get_or<std::string>(m, "hamiltonian", "full");
    if (h == "full")
      c.options.model = Model::full;
    else if (h == "ld" || h == "lamb-dicke")
      c.options.model = Model::lamb_dicke;
    else
      throw ValidationError("model.hamiltonian must be 'full' or 'ld'");
  }
  if (!doc.contains("grids")) throw ValidationError("config needs a 'grids' object");
  const auto& g = doc.at("grids");
  detail::reject_unknown(g, {"eta", "nbar"}, "grids");
  c.eta_grid = detail::get_or<std::vector<double>>(g, "eta", {});
  c.nbar_grid = detail::get_or<std::vector<double>>(g, "nbar", {});
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    detail::reject_unknown(o, {"csv", "json"}, "output");
    c.csv_path = detail::get_or<std::string>(o, "csv", "");
    c.json_path = detail::get_or<std::string>(o, "json", "");
  }
  if (c.eta_grid.empty() || c.nbar_grid.empty()) throw ValidationError("grids.eta and grids.nbar must be nonempty");
  for (double e : c.eta_grid)
    if (!(e > 0.0)) throw ValidationError("grids.eta values must be > 0");
  for (double n : c.nbar_grid)
    if (!(n >= 0.0)) throw ValidationError("grids.nbar values must be >= 0");
  if (c.options.n_ions < 2 || c.options.n_ions > 6) throw ValidationError("model.n_ions must be in [2, 6]");
  if (c.options.n_max < 1) throw ValidationError("model.n_max must be >= 1");
  if (c.options.n_pad < 0) throw ValidationError("model.n_pad must be >= 0");
  return c;
}

inline constexpr const char* kCsvHeader = "eta,nbar,n_max,infidelity_gate,infidelity_ghz,leakage,flags";

inline std::string flags_field(const SweepRecord& rec) {
  std::string f;
  for (const auto& s : rec.flags) f += (f.empty() ? "" : "|") + s;
  return f;
}

inline std::string sweep_csv(const SweepResult& res) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const SweepRecord& rec : res.records) {
    out += fmt17(rec.eta) + "," + fmt17(rec.nbar) + "," + std::to_string(rec.n_max) + "," +
           fmt17(rec.infidelity_gate) + "," + fmt17(rec.infidelity_ghz) + "," + fmt17(rec.leakage) + "," +
           flags_field(rec) + "\n";
  }
  return out;
}

inline ordered_json sweep_json(const SweepResult& res) {
  ordered_json recs = ordered_json::array();
  for (const SweepRecord& rec : res.records) {
    ordered_json r = {{"eta", rec.eta},
                      {"nbar", rec.nbar},
                      {"n_max", rec.n_max},
                      {"infidelity_gate", rec.infidelity_gate},
                      {"infidelity_truth_table", rec.infidelity_truth_table},
                      {"infidelity_ghz", rec.infidelity_ghz},
                      {"leakage", rec.leakage},
                      {"flags", rec.flags},
                      {"error", rec.error},
                      {"gate_params", to_json(rec.gate_params)},
                      {"ghz_params", to_json(rec.ghz_params)}};
    recs.push_back(std::move(r));
  }
  return {{"command", "sweep"},
          {"version", kVersion},
          {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"seed", res.options.seed},
          {"hamiltonian", to_string(res.options.model)},
          {"n_ions", res.options.n_ions},
          {"n_max", res.options.n_max},
          {"n_pad", res.options.n_pad},
          {"grids", {{"eta", res.eta_grid}, {"nbar", res.nbar_grid}}},
          {"csv_columns", {"eta", "nbar", "n_max", "infidelity_gate", "infidelity_ghz", "leakage", "flags"}},
          {"records", recs}};
}

inline std::string sweep_text(const SweepResult& res) {
  std::ostringstream o;
  o << "Lamb-Dicke sweep (" << to_string(res.options.model) << ", N=" << res.options.n_ions
    << ", n_max=" << res.options.n_max << ")\n";
  o << "  eta        nbar       gate_infid   ghz_infid    leakage      runtime_s  flags\n";
  for (const SweepRecord& rec : res.records) {
    char line[200];
    std::snprintf(line, sizeof line, "  %-10.4g %-10.4g %-12.4e %-12.4e %-12.4e %-10.3f %s\n", rec.eta, rec.nbar,
                  rec.infidelity_gate, rec.infidelity_ghz, rec.leakage, rec.runtime_s,
                  flags_field(rec).c_str());
    o << line;
    if (!rec.error.empty()) o << "    error: " << rec.error << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

struct ConvergenceConfig {
  double eta = 0.1;
  double nbar = 2.0;
  int n_pad = 10;
  Model model = Model::lamb_dicke;
  std::vector<int> n_max_list;
};

inline Report run_convergence(const ConvergenceConfig& c) {
  if (!(c.nbar >= 0.0)) throw ValidationError("--nbar must be >= 0");
  if (c.n_max_list.empty()) throw ValidationError("--n-max-list must be nonempty");
  for (std::size_t i = 1; i < c.n_max_list.size(); ++i)
    if (c.n_max_list[i] <= c.n_max_list[i - 1])
      throw ValidationError("--n-max-list must be strictly increasing");
  const ModelParams p = solve_gate_params(c.eta).params(2, c.n_max_list.front(), c.n_pad);
  const auto rows = truncation_convergence(p, c.model, MotionSpec::thermal(c.nbar), c.n_max_list);

  ordered_json jr = ordered_json::array();
  std::ostringstream o;
  o << "truncation convergence (" << to_string(c.model) << ", eta=" << fmt6(c.eta)
    << ", nbar=" << fmt6(c.nbar) << ")\n"
    << "  n_max  gate_infidelity  independence_metric  tail_weight  d_gate       d_metric\n";
  for (const ConvergenceRow& row : rows) {
    ordered_json j = {{"n_max", row.n_max},
                      {"gate_infidelity", row.gate_infidelity},
                      {"independence_metric", row.independence_metric},
                      {"tail_weight", row.tail_weight},
                      {"d_gate_infidelity", nullptr},
                      {"d_independence_metric", nullptr}};
    char line[200];
    if (row.d_gate_infidelity) {
      j["d_gate_infidelity"] = *row.d_gate_infidelity;
      j["d_independence_metric"] = *row.d_independence_metric;
      std::snprintf(line, sizeof line, "  %-6d %-16.6e %-20.6e %-12.4e %-12.4e %-12.4e\n", row.n_max,
                    row.gate_infidelity, row.independence_metric, row.tail_weight, *row.d_gate_infidelity,
                    *row.d_independence_metric);
    } else {
      std::snprintf(line, sizeof line, "  %-6d %-16.6e %-20.6e %-12.4e %-12s %-12s\n", row.n_max,
                    row.gate_infidelity, row.independence_metric, row.tail_weight, "-", "-");
    }
    o << line;
    jr.push_back(std::move(j));
  }
  Report r;
  r.json = {{"command", "convergence"},
            {"model", to_string(c.model)},
            {"params", to_json(p)},
            {"motion", to_json(MotionSpec::thermal(c.nbar))},
            {"rows", jr}};
  r.text = o.str();
  return r;
}

// ---------------------------------------------------------------------------
// file output
// ---------------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw Error("failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace iongate::cli
