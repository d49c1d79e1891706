#pragma once

// Scenario document: one TOML (or JSON) file configuring robot, pneumatics,
// controller, simulation, optimizer, task, and sweep axes. Pressures in the
// document are gauge; everything internal is absolute.

#include <json.hpp>

#include <string>
#include <vector>

#include "hopper/control.hpp"
#include "hopper/pneumatics.hpp"
#include "hopper/point_mass.hpp"
#include "hopper/rigid_body.hpp"
#include "hopper/sim.hpp"
#include "hopper/trajopt.hpp"

namespace hopper {

enum class TaskKind {
  PeriodicCharge,
  EnhancedHop,
  ConsecutiveEnhanced,
  PlatformJump,
  MotorOnlyMax,
};

const char* task_name(TaskKind k);

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> problems_in);
  std::vector<std::string> problems;
};

struct Scenario {
  TaskKind task = TaskKind::PeriodicCharge;
  uint64_t seed = 1;
  int cycles = 40;
  std::string model = "pointmass";  // pointmass | full

  RobotModel robot;
  PneumaticConfig pneu;
  double tank_volume_m3 = 1.939e-4;
  double initial_tank_gauge_pa = 0.0;

  ControllerConfig controller;
  MotorParams motor_params;
  SimConfig sim;

  // point-mass / planning extras
  double charge_hop_height_m = 0.025;  // periodic charging hop, above leg_max
  double plan_apex_height_m = 0.043;   // explosive / motor-only planning hop
  double release_gauge_pa = 202045.0;  // enhanced-hop release threshold
  int releases = 2;                    // consecutive-enhanced releases
  double platform_height_m = 0.12;
  double trigger_lead_s = 0.0;
  int nodes_descent = 40;
  int nodes_ascent = 40;
  double cost_c = 1e-4;
  double nlp_tol = 1e-8;

  // sweeps (gauge Pa and kg); empty = single point
  std::vector<double> sweep_tank_gauge_pa;
  std::vector<double> sweep_mass_kg;

  // derived builders
  PointMassConfig point_mass_config() const;
  TrajOptConfig trajopt_config(TrajObjective obj, bool use_actuator,
                               double tank_pressure_abs_pa) const;
  TankState initial_tank() const;
  MotorEnvelope motor_envelope() const;

  void validate() const;  // throws ConfigError listing every problem
};

// Parse + validate a scenario document (already loaded json tree). Unknown
// keys are rejected so typos cannot silently fall back to defaults.
Scenario scenario_from_json(const nlohmann::json& doc);

Scenario load_scenario(const std::string& path);

// Nominal-Jacobian motor envelope from the robot datasheet numbers.
MotorEnvelope motor_envelope_from_robot(const RobotModel& model);

}  // namespace hopper
