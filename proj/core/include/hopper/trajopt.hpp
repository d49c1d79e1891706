#pragma once

// Trapezoidal direct collocation for the point-mass ground phase, split at
// the compression/extension turning point into descending and ascending
// phases with free durations. Periodic (charging) solves minimize motor
// effort with an apex-return boundary; explosive solves maximize apex height
// with a smoothness term.

#include <optional>
#include <string>
#include <vector>

#include "hopper/nlp.hpp"
#include "hopper/pneumatics.hpp"
#include "hopper/point_mass.hpp"

namespace hopper {

enum class TrajObjective { Periodic, Explosive };

struct TrajOptConfig {
  double m_tilde_kg = 2.2;
  double gravity = 9.81;
  double leg_min_m = 0.145;
  double leg_max_m = 0.245;
  double apex_z_m = 0.270;  // H_apex: absolute hip height the hop starts from
  int n_desc = 40;
  int n_asc = 40;
  MotorEnvelope motor;
  TrajObjective objective = TrajObjective::Periodic;
  bool use_actuator = false;  // pump-only vs pump+actuator ascent
  double cost_c = 1e-4;       // effort weight in the explosive cost
  PneumaticConfig pneu;
  double tank_pressure_pa = kAtmospherePa;
  double tank_volume_m3 = 1.939e-4;
  // Solenoid lead before ascent start: delta starts at delta(lead). Negative
  // means automatic (the transient rise time, so delta ~ 0.9 at the push);
  // without a lead the problem grows a degenerate dwell arc at the bottom.
  double valve_lead_s = -1.0;
  NlpOptions nlp;

  void validate() const;
};

struct TrajOptProblem {
  TrajOptConfig cfg;
  int n_vars = 0;
  int n_eq = 0;
  int n_ineq = 0;
  // index helpers into the decision vector
  int iTd() const { return 0; }
  int iTa() const { return 1; }
  int iLd(int i) const { return 2 + i; }
  int iVd(int i) const { return 2 + (cfg.n_desc + 1) + i; }
  int iFd(int i) const { return 2 + 2 * (cfg.n_desc + 1) + i; }
  int iLa(int i) const { return 2 + 3 * (cfg.n_desc + 1) + i; }
  int iVa(int i) const { return 2 + 3 * (cfg.n_desc + 1) + (cfg.n_asc + 1) + i; }
  int iFa(int i) const { return 2 + 3 * (cfg.n_desc + 1) + 2 * (cfg.n_asc + 1) + i; }

  NlpProblem nlp(const std::optional<Eigen::VectorXd>& guess) const;
  Eigen::VectorXd default_guess() const;
};

TrajOptProblem build_problem(const TrajOptConfig& cfg);

struct TrajSolution {
  std::vector<double> t_desc, L_desc, V_desc, F_desc;
  std::vector<double> t_asc, L_asc, V_asc, F_asc;  // t_asc relative to ascent start
  double T_desc = 0, T_asc = 0;
  double predicted_apex_height_m = 0;  // above the standing (leg_max) height
  double valve_trigger_s = 0;          // relative to ascent start (<= 0 = lead)
  double objective = 0;
  double max_defect = 0;
  double max_path_violation = 0;
  double stationarity = 0;
  bool converged = false;
  std::string message;
  // config echo needed by consumers
  double plan_tank_pa = kAtmospherePa;
  double tank_volume_m3 = 1.939e-4;
  double m_tilde_kg = 2.2;
  double apex_z_m = 0;
  bool used_actuator = false;
};

struct SolverFailure : std::runtime_error {
  SolverFailure(const std::string& msg, TrajSolution best)
      : std::runtime_error(msg), best_iterate(std::move(best)) {}
  TrajSolution best_iterate;
};

// Solve; throws SolverFailure with the best iterate if tolerances are not met.
TrajSolution solve(const TrajOptProblem& problem,
                   const std::optional<Eigen::VectorXd>& initial_guess = std::nullopt);

// Defect residuals of a candidate decision vector (exposed for the gradient
// correctness tests).
Eigen::VectorXd defect_residuals(const TrajOptProblem& problem,
                                 const Eigen::VectorXd& z);

// Pressure-compensated motor force profile for cycle k:
//   F^k(L) = F*(L) + F_pump(L; P_plan) - F_pump(L; P_now)
// evaluated on the solution's descent nodes.
std::vector<double> feedforward_compensation(const TrajSolution& sol,
                                             const PneumaticConfig& pneu,
                                             double tank_volume_m3,
                                             double tank_pressure_now_pa);

// Solenoid trigger time relative to ascent start: earlier by the time the
// fitted transient needs to reach 0.9 (so delta ~ 1 when extension begins).
double valve_timing(const ActuatorModel& act);

// Replay profiles (leg-length indexed) for the point-mass controller.
PhaseProfile descent_profile(const TrajSolution& sol);
PhaseProfile ascent_profile(const TrajSolution& sol);

}  // namespace hopper
