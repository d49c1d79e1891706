#pragma once

// Scenario task runners shared by the CLI and the acceptance suite: charging
// runs, enhanced hops, sweeps, system-ID fitting, and report aggregation.
// Every runner writes deterministic CSV/JSON outputs into a run directory.

#include <json.hpp>

#include <string>

#include "hopper/csv.hpp"
#include "hopper/energy.hpp"
#include "hopper/scenario.hpp"
#include "hopper/sysid.hpp"
#include "hopper/trajopt.hpp"

namespace hopper {

nlohmann::json trajsolution_to_json(const TrajSolution& sol);
TrajSolution trajsolution_from_json(const nlohmann::json& j);

void write_solution_files(const TrajSolution& sol, const std::string& dir,
                          const std::string& stem);
void write_point_trace_csv(const PointTrace& trace, const std::string& path);
void write_sim_trace_csv(const SimTrace& trace, const std::string& path);
void write_ledger_csv(const EnergyLedger& led, const std::string& path);

// Fit a pump or transient dataset; returns the report. Throws CsvError on a
// schema mismatch and FitError subtypes on fit failures.
nlohmann::json run_sysid(const CsvTable& table, const std::string& kind,
                         const PumpGeometry& geom, const std::string& out_dir);

// Solve the scenario's optimization problem(s) and write solution files.
nlohmann::json run_optimize(const Scenario& s, const std::string& out_dir,
                            bool verbose = false);

// Run the scenario task (simulation + ledger + summary); sweeps fan out over
// `jobs` worker threads with per-point output directories.
nlohmann::json run_simulate(const Scenario& s, const std::string& out_dir,
                            int jobs = 1, bool verbose = false);

// Aggregate completed runs under run_dir into plot-ready CSV bundles.
nlohmann::json run_report(const std::string& run_dir, const std::string& out_dir);

}  // namespace hopper
