#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace iongate;
using namespace iongate::cli;

namespace {

Model parse_model(bool full) { return full ? Model::full : Model::lamb_dicke; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-pulse standing-wave phase gate simulator"};
  app.require_subcommand(1);

  std::string out_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int n_max = 40;
  int n_pad = 10;
  app.add_option("--out", out_path, "write machine output (JSON or CSV) to this path");
  app.add_option("--format", format, "machine output format")->check(CLI::IsMember({"json", "csv", "text"}));
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { seed = s; seed_given = true; },
                                         "seed recorded in provenance");
  app.add_option("--n-max", n_max, "Fock cutoff (states |0>..|n_max>)");
  app.add_option("--n-pad", n_pad, "extra Fock levels for the operator sine");
  app.fallthrough();

  double eta = 0.1;
  double nbar = 2.0;
  bool full = false;

  auto* solve = app.add_subcommand("solve", "solve the gate parameter conditions");
  bool paper_eq6 = false;
  solve->add_option("--eta", eta, "Lamb-Dicke parameter")->required();
  solve->add_flag("--paper-eq6", paper_eq6, "also evaluate the literal closed-form parameter choice");

  auto* gate = app.add_subcommand("gate-check", "two-ion truth table with thermal motion");
  gate->add_option("--eta", eta, "Lamb-Dicke parameter");
  gate->add_option("--nbar", nbar, "mean thermal occupation");
  gate->add_flag("--full-hamiltonian", full, "use sin(eta(a+a^dag)+theta) instead of its linearization");

  auto* ghz = app.add_subcommand("ghz", "N-ion GHZ generation from |g..g>");
  int n_ions = 2;
  bool allow_large = false;
  ghz->add_option("--n-ions", n_ions, "number of ions");
  ghz->add_option("--eta", eta, "Lamb-Dicke parameter");
  ghz->add_option("--nbar", nbar, "mean thermal occupation");
  ghz->add_flag("--full-hamiltonian", full, "use the full standing-wave Hamiltonian");
  ghz->add_flag("--allow-large", allow_large, "lift the N <= 6 guard");

  auto* sweep = app.add_subcommand("sweep", "Lamb-Dicke error sweep from a JSON config");
  std::string config_path;
  sweep->add_option("config", config_path, "config file")->required();

  auto* conv = app.add_subcommand("convergence", "gate quality versus Fock cutoff");
  std::vector<int> n_max_list;
  conv->add_option("--eta", eta, "Lamb-Dicke parameter");
  conv->add_option("--nbar", nbar, "mean thermal occupation");
  conv->add_option("--n-max-list", n_max_list, "increasing cutoffs, e.g. 20,40,80")
      ->required()
      ->delimiter(',');
  conv->add_flag("--full-hamiltonian", full, "use the full standing-wave Hamiltonian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (n_max < 1) throw ValidationError("--n-max must be >= 1");
    if (n_pad < 0) throw ValidationError("--n-pad must be >= 0");
    if (!(eta > 0.0)) throw ValidationError("--eta must be > 0");

    Report report;
    if (*solve) {
      report = run_solve(eta, paper_eq6);
    } else if (*gate) {
      report = run_gate_check({eta, nbar, n_max, n_pad, parse_model(full)});
    } else if (*ghz) {
      report = run_ghz({n_ions, eta, nbar, n_max, n_pad, parse_model(full), allow_large});
    } else if (*conv) {
      report = run_convergence({eta, nbar, n_pad, parse_model(full), n_max_list});
    } else if (*sweep) {
      SweepConfig cfg = parse_sweep_config(read_file(config_path));
      if (seed_given) cfg.options.seed = seed;
      if (app.count("--n-max") > 0) cfg.options.n_max = n_max;
      if (app.count("--n-pad") > 0) cfg.options.n_pad = n_pad;
      const SweepResult res = lamb_dicke_error_sweep(cfg.eta_grid, cfg.nbar_grid, cfg.options);
      std::cout << sweep_text(res);
      std::string csv_path = cfg.csv_path, json_path = cfg.json_path;
      if (!out_path.empty()) {
        if (format == "json") {
          json_path = out_path;
        } else {
          csv_path = out_path;
          json_path = out_path + ".json";
        }
      }
      if (!csv_path.empty()) write_file(csv_path, sweep_csv(res));
      if (!json_path.empty()) write_file(json_path, dump(sweep_json(res)));
      for (const auto& rec : res.records)
        if (!rec.error.empty()) return 1;
      return 0;
    }

    report.json["seed"] = seed;
    std::cout << report.text;
    if (!out_path.empty()) {
      if (format == "csv") throw ValidationError("--format csv is only available for sweep");
      write_file(out_path, format == "json" ? dump(report.json) : report.text);
    }
    return 0;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
