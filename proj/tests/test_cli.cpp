#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::path(IONGATE_TEST_WORKDIR) / "cli";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct CliResult {
  int code;
  std::string output;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

CliResult run(const std::string& args) {
  const fs::path log = work_dir() / "last_run.log";
  const std::string cmd = std::string(IONGATE_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

fs::path out(const std::string& name) { return work_dir() / name; }

ordered_json load(const fs::path& p) { return ordered_json::parse(slurp(p)); }

void write_config(const fs::path& p, const std::string& body) {
  std::ofstream f(p);
  f << body;
}

const char* kSweepConfig = R"({
  "model": {"n_ions": 2, "n_max": 24, "n_pad": 8, "hamiltonian": "full", "seed": 7},
  "grids": {"eta": [0.05, 0.1, 0.2], "nbar": [0.0, 0.5]}
})";

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Same keys in the same order, same value types, numbers within tolerance.
void expect_schema_match(const ordered_json& golden, const ordered_json& got, const std::string& path) {
  ASSERT_EQ(golden.type_name(), std::string(got.type_name())) << path;
  if (golden.is_object()) {
    std::vector<std::string> gk, ok;
    for (const auto& [k, v] : golden.items()) gk.push_back(k);
    for (const auto& [k, v] : got.items()) ok.push_back(k);
    ASSERT_EQ(gk, ok) << path;
    for (const auto& k : gk) {
      if (k == "eigen_version") continue;
      expect_schema_match(golden.at(k), got.at(k), path + "." + k);
    }
  } else if (golden.is_array()) {
    ASSERT_EQ(golden.size(), got.size()) << path;
    for (std::size_t i = 0; i < golden.size(); ++i)
      expect_schema_match(golden[i], got[i], path + "[" + std::to_string(i) + "]");
  } else if (golden.is_number()) {
    const double a = golden.get<double>(), b = got.get<double>();
    EXPECT_NEAR(a, b, 1e-9 + 1e-9 * std::abs(a)) << path;
  } else {
    EXPECT_EQ(golden, got) << path;
  }
}

void check_golden(const std::string& name, const std::string& args) {
  const fs::path p = out(name + ".json");
  const CliResult r = run(args + " --out " + p.string());
  ASSERT_EQ(r.code, 0) << r.output;
  expect_schema_match(load(fs::path(IONGATE_GOLDEN_DIR) / (name + ".json")), load(p), name);
}

}  // namespace

TEST(CliSolve, AchievesTargetTwist) {
  const CliResult r = run("solve --eta 0.1 --out " + out("solve.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("solve.json"));
  EXPECT_NEAR(j["solution"]["achieved_C"].get<double>(), M_PI / 8.0, 1e-12);
  EXPECT_NEAR(-j["solution"]["achieved_D"].get<double>(), M_PI / 4.0, 1e-12);
  EXPECT_NE(r.output.find("theta="), std::string::npos);
}

TEST(CliSolve, PaperEq6SideBySide) {
  const CliResult r = run("solve --eta 0.1 --paper-eq6 --out " + out("solve_eq6.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("solve_eq6.json"));
  EXPECT_NEAR(j["paper_eq6"]["achieved_C"].get<double>(), 1.2337, 1e-4);
  EXPECT_NEAR(j["paper_eq6"]["achieved_C"].get<double>(), M_PI * M_PI / 8.0, 1e-10);
  EXPECT_FALSE(j["paper_eq6"]["matches_target"].get<bool>());
  EXPECT_GT(j["paper_eq6"]["residual_C"].get<double>(), 0.8);
}

TEST(CliSolve, NegativeEtaIsValidationError) {
  EXPECT_EQ(run("solve --eta -1").code, 2);
  EXPECT_EQ(run("solve --eta 0").code, 2);
}

TEST(CliSolve, MissingEtaIsUsageError) { EXPECT_EQ(run("solve").code, 2); }

TEST(Cli, UnknownSubcommandRejected) { EXPECT_NE(run("teleport").code, 0); }

TEST(Cli, BadFormatRejected) { EXPECT_EQ(run("solve --eta 0.1 --format xml").code, 2); }

TEST(CliGateCheck, LambDickeRowsPerfect) {
  const CliResult r = run("gate-check --eta 0.1 --nbar 2 --n-max 40 --out " + out("gate.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("gate.json"));
  ASSERT_EQ(j["rows"].size(), 4u);
  for (const auto& row : j["rows"]) {
    EXPECT_GE(row["fidelity"].get<double>(), 1.0 - 1e-8);
    EXPECT_GE(row["motion_fidelity"].get<double>(), 1.0 - 1e-8);
  }
}

TEST(CliGateCheck, LambDickeRowsPerfectAtSeventy) {
  const CliResult r = run("gate-check --eta 0.1 --nbar 2 --n-max 70 --out " + out("gate70.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("gate70.json"));
  for (const auto& row : j["rows"]) {
    EXPECT_GE(row["fidelity"].get<double>(), 1.0 - 1e-8);
    EXPECT_GE(row["motion_fidelity"].get<double>(), 1.0 - 1e-8);
  }
  EXPECT_TRUE(j["flags"].empty());
}

TEST(CliGateCheck, DefaultCutoffFlagsTruncation) {
  ASSERT_EQ(run("gate-check --nbar 2 --out " + out("gate40.json").string()).code, 0);
  const ordered_json j = load(out("gate40.json"));
  EXPECT_EQ(j["flags"][0], "truncation_unreliable");
}

TEST(CliGateCheck, VacuumAndThermalRowsAgree) {
  ASSERT_EQ(run("gate-check --nbar 0 --out " + out("gate0.json").string()).code, 0);
  ASSERT_EQ(run("gate-check --nbar 2 --out " + out("gate2.json").string()).code, 0);
  const ordered_json a = load(out("gate0.json")), b = load(out("gate2.json"));
  for (std::size_t k = 0; k < 4; ++k)
    EXPECT_NEAR(a["rows"][k]["fidelity"].get<double>(), b["rows"][k]["fidelity"].get<double>(), 1e-8);
}

TEST(CliGateCheck, FullHamiltonianReported) {
  const CliResult r = run("gate-check --full-hamiltonian --out " + out("gate_full.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("gate_full.json"));
  EXPECT_EQ(j["model"], "full");
  EXPECT_GT(j["gate_infidelity"].get<double>(), 0.0);
  EXPECT_LT(j["gate_infidelity"].get<double>(), 0.01);
}

TEST(CliGhz, SizeGuard) {
  EXPECT_EQ(run("ghz --n-ions 7").code, 2);
  EXPECT_EQ(run("ghz --n-ions 1").code, 2);
}

TEST(CliGhz, OddRecipe) {
  const CliResult r = run("ghz --n-ions 3 --nbar 0 --n-max 30 --out " + out("ghz3.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("ghz3.json"));
  EXPECT_EQ(j["recipe"], "odd");
  EXPECT_GE(j["fidelity"].get<double>(), 1.0 - 1e-8);
  EXPECT_FALSE(j.contains("expected_relative_phase"));
}

TEST(CliGhz, EvenRecipeReportsPhaseComparison) {
  const CliResult r = run("ghz --n-ions 2 --nbar 0 --n-max 30 --out " + out("ghz2.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("ghz2.json"));
  EXPECT_EQ(j["recipe"], "even");
  EXPECT_GE(j["fidelity"].get<double>(), 1.0 - 1e-8);
  EXPECT_NEAR(j["relative_phase"].get<double>(), M_PI / 2.0, 1e-8);
  EXPECT_NEAR(j["expected_relative_phase"].get<double>(), 3.0 * M_PI / 2.0, 1e-12);
  EXPECT_NEAR(j["relative_phase_error"].get<double>(), M_PI, 1e-8);
}

TEST(CliSweep, GridToCsvAndSidecar) {
  write_config(out("sweep.json"), kSweepConfig);
  const CliResult r = run("--format csv --out " + out("sweep.csv").string() + " sweep " + out("sweep.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = slurp(out("sweep.csv"));
  EXPECT_EQ(count_lines(csv), 7u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "eta,nbar,n_max,infidelity_gate,infidelity_ghz,leakage,flags");
  const ordered_json side = load(out("sweep.csv.json"));
  EXPECT_EQ(side["seed"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(side["records"].size(), 6u);
  EXPECT_TRUE(side.contains("version"));
  EXPECT_TRUE(side["records"][0].contains("gate_params"));
}

TEST(CliSweep, RerunIsByteIdentical) {
  write_config(out("sweep_det.json"), kSweepConfig);
  for (const char* tag : {"a", "b"}) {
    const std::string base = out(std::string("det_") + tag + ".csv").string();
    ASSERT_EQ(run("--format csv --out " + base + " sweep " + out("sweep_det.json").string()).code, 0);
  }
  EXPECT_EQ(slurp(out("det_a.csv")), slurp(out("det_b.csv")));
  EXPECT_EQ(slurp(out("det_a.csv.json")), slurp(out("det_b.csv.json")));
}

TEST(CliSweep, OutputPathsFromConfig) {
  write_config(out("sweep_paths.json"), R"({"grids": {"eta": [0.1], "nbar": [0.0]}, "model": {"n_max": 16},
    "output": {"csv": ")" + out("cfg.csv").string() + R"(", "json": ")" + out("cfg.json").string() + R"("}})");
  ASSERT_EQ(run("sweep " + out("sweep_paths.json").string()).code, 0);
  EXPECT_EQ(count_lines(slurp(out("cfg.csv"))), 2u);
  EXPECT_EQ(load(out("cfg.json"))["records"].size(), 1u);
}

TEST(CliSweep, LeakageFlagAtSmallCutoff) {
  write_config(out("sweep_leak.json"), R"({"grids": {"eta": [0.05, 0.3], "nbar": [2.0]}})");
  ASSERT_EQ(run("--n-max 20 --format csv --out " + out("leak.csv").string() + " sweep " +
                out("sweep_leak.json").string())
                .code,
            0);
  const ordered_json side = load(out("leak.csv.json"));
  EXPECT_EQ(side["n_max"].get<int>(), 20);
  const auto& flags = side["records"][1]["flags"];
  EXPECT_NE(std::find(flags.begin(), flags.end(), "leakage"), flags.end());
}

TEST(CliSweep, UnknownKeysRejected) {
  write_config(out("bad1.json"), R"({"grids": {"eta": [0.1], "nbar": [0]}, "extra": 1})");
  write_config(out("bad2.json"), R"({"grids": {"eta": [0.1], "nbar": [0], "theta": [0]}})");
  write_config(out("bad3.json"), R"({"grids": {"eta": [0.1], "nbar": [0]}, "model": {"nmax": 10}})");
  for (const char* f : {"bad1.json", "bad2.json", "bad3.json"}) EXPECT_EQ(run("sweep " + out(f).string()).code, 2) << f;
}

TEST(CliSweep, InvalidValuesRejected) {
  write_config(out("bad4.json"), R"({"grids": {"eta": [-0.1], "nbar": [0]}})");
  write_config(out("bad5.json"), R"({"grids": {"eta": [0.1], "nbar": [0]}, "model": {"hamiltonian": "exact"}})");
  write_config(out("bad6.json"), R"({"grids": {"eta": [0.1]})");
  for (const char* f : {"bad4.json", "bad5.json", "bad6.json"}) EXPECT_EQ(run("sweep " + out(f).string()).code, 2) << f;
  EXPECT_EQ(run("sweep " + out("does_not_exist.json").string()).code, 2);
}

TEST(CliConvergence, DecreasingListRejected) { EXPECT_EQ(run("convergence --n-max-list 40,20").code, 2); }

TEST(CliConvergence, SingleElement) {
  const CliResult r = run("convergence --n-max-list 30 --out " + out("conv1.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("conv1.json"));
  ASSERT_EQ(j["rows"].size(), 1u);
  EXPECT_TRUE(j["rows"][0]["d_gate_infidelity"].is_null());
}

TEST(CliConvergence, DoublingFromConvergedCutoff) {
  const CliResult r = run("convergence --nbar 2 --n-max-list 70,140 --out " + out("conv2.json").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const ordered_json j = load(out("conv2.json"));
  EXPECT_LT(j["rows"][1]["d_gate_infidelity"].get<double>(), 1e-9);
}

TEST(CliDeterminism, JsonRerunsIdentical) {
  for (const std::string args : {"solve --eta 0.2 --paper-eq6", "gate-check --nbar 0.5 --n-max 30",
                                 "ghz --n-ions 3 --nbar 0 --n-max 20", "convergence --n-max-list 20,30"}) {
    ASSERT_EQ(run("--seed 5 " + args + " --out " + out("rerun_a.json").string()).code, 0) << args;
    ASSERT_EQ(run("--seed 5 " + args + " --out " + out("rerun_b.json").string()).code, 0) << args;
    EXPECT_EQ(slurp(out("rerun_a.json")), slurp(out("rerun_b.json"))) << args;
  }
}

TEST(CliGolden, Solve) { check_golden("solve", "solve --eta 0.1 --paper-eq6"); }
TEST(CliGolden, GateCheck) { check_golden("gate_check", "gate-check --eta 0.1 --nbar 2 --n-max 40"); }
TEST(CliGolden, Ghz) { check_golden("ghz", "ghz --n-ions 2 --eta 0.1 --nbar 0 --n-max 30"); }
TEST(CliGolden, Convergence) { check_golden("convergence", "convergence --n-max-list 20,40"); }

TEST(CliGolden, Sweep) {
  write_config(out("sweep_golden.json"), kSweepConfig);
  check_golden("sweep", "sweep " + out("sweep_golden.json").string());
}
