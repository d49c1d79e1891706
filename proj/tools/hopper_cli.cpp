// Command-line front end: sysid / optimize / simulate / report.
//
// Exit codes: 0 success, 2 config or input-schema problem, 3 fit failure,
// 4 solver failure, 5 simulation divergence.

#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "hopper/tasks.hpp"
#include "hopper/toml.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFit = 3;
constexpr int kExitSolver = 4;
constexpr int kExitDiverged = 5;

int guarded(bool verbose, const std::function<int()>& body) {
  try {
    return body();
  } catch (const hopper::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const hopper::CsvError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hopper::TomlError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hopper::FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const hopper::SolverFailure& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    std::cerr << "  max defect " << e.best_iterate.max_defect << ", stationarity "
              << e.best_iterate.stationarity << "\n";
    return kExitSolver;
  } catch (const hopper::SimDivergedError& e) {
    std::cerr << "simulation diverged: " << e.what() << " at t=" << e.time_s << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (verbose) throw;
    return 1;
  }
}

hopper::Scenario load(const std::string& config_path, uint64_t seed_override,
                      bool has_seed) {
  hopper::Scenario s = hopper::load_scenario(config_path);
  if (has_seed) {
    s.seed = seed_override;
    s.sim.seed = seed_override;
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pneumatically augmented hopper: simulation, system ID, "
               "trajectory optimization, reporting"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", input_csv, kind = "pump", run_dir;
  uint64_t seed = 0;
  bool has_seed = false;
  int jobs = 1;
  bool verbose = false;
  app.add_flag("--verbose", verbose, "verbose diagnostics");

  auto* sysid = app.add_subcommand("sysid", "fit pneumatic models from CSV data");
  sysid->add_option("--input", input_csv, "input CSV path")->required();
  sysid->add_option("--kind", kind, "pump | transient")->required();
  sysid->add_option("--out", out_dir, "output directory");
  sysid->add_option("--config", config_path, "scenario config (pump geometry)");

  auto* optimize = app.add_subcommand("optimize", "solve hop trajectory problems");
  optimize->add_option("--config", config_path, "scenario config")->required();
  optimize->add_option("--out", out_dir, "output directory");
  optimize->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    has_seed = true;
  });

  auto* simulate = app.add_subcommand("simulate", "run the scenario task");
  simulate->add_option("--config", config_path, "scenario config")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    has_seed = true;
  });
  simulate->add_option("--jobs", jobs, "parallel sweep workers");

  auto* report = app.add_subcommand("report", "aggregate run outputs into plot CSVs");
  report->add_option("--run", run_dir, "completed run directory")->required();
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (sysid->parsed()) {
    return guarded(verbose, [&] {
      hopper::PumpGeometry geom;
      if (!config_path.empty()) geom = hopper::load_scenario(config_path).pneu.pump;
      const hopper::CsvTable table = hopper::read_csv(input_csv);
      const auto rep = hopper::run_sysid(table, kind, geom, out_dir);
      std::cout << rep.dump(2) << "\n";
      return 0;
    });
  }
  if (optimize->parsed()) {
    return guarded(verbose, [&] {
      const auto s = load(config_path, seed, has_seed);
      const auto summary = hopper::run_optimize(s, out_dir, verbose);
      if (summary.contains("predicted_apex_m"))
        std::cout << "predicted apex height: " << summary["predicted_apex_m"]
                  << " m\n";
      if (summary.contains("periodic_apex_m"))
        std::cout << "periodic apex height: " << summary["periodic_apex_m"] << " m\n";
      return 0;
    });
  }
  if (simulate->parsed()) {
    return guarded(verbose, [&] {
      const auto s = load(config_path, seed, has_seed);
      const auto summary = hopper::run_simulate(s, out_dir, jobs, verbose);
      std::cout << summary.dump(2) << "\n";
      return 0;
    });
  }
  if (report->parsed()) {
    return guarded(verbose, [&] {
      const auto summary = hopper::run_report(run_dir, out_dir);
      std::cout << summary.dump(2) << "\n";
      return 0;
    });
  }
  return 0;
}
