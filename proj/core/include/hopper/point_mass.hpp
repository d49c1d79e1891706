#pragma once

// Point-mass hopping simulator: the projected mass rides the prismatic
// pneumatic joint (hip height equals leg length in stance, ballistic flight
// in the air). This is the model the trajectory optimizer plans on; it also
// runs the charging / enhanced-hop scenarios.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hopper/pneumatics.hpp"

namespace hopper {

// Speed-dependent motor force bounds through the nominal Jacobian
// (stall-torque / no-load-speed line of the brushed DC drive).
struct MotorEnvelope {
  double f_max_n = 148.0;
  double v_nom_mps = 1.18;  // leg extension rate at motor no-load speed
  bool allow_pull = false;  // permit negative (hip-toward-foot) force

  double upper(double v) const;
  double lower(double v) const;
};

struct PointMassConfig {
  double mass_kg = 2.2;  // projected mass m-tilde
  double gravity = 9.81;
  double leg_min_m = 0.145;
  double leg_max_m = 0.245;
  double dt_s = 1e-4;
  double max_time_s = 300.0;
  PneumaticConfig pneu;
  MotorEnvelope motor;

  void validate() const;
};

enum class PointPhase { Aerial, Descent, Ascent };

struct PointWorld {
  PointMassConfig cfg;
  TankState tank;
  TankState tank_at_trigger;
  TransientState transient;
  double z = 0.0;  // hip height above ground
  double v = 0.0;
  double t = 0.0;
  PointPhase phase = PointPhase::Aerial;
  int cycle = 0;
  double stance_min_z = 0.0;
  bool tank_updated_this_stance = false;
};

struct PointCommand {
  double f_motor = 0.0;
  bool valve_open = false;
  // Pre-trigger lead: when the valve opens, the transient starts at
  // delta(lead) instead of zero (the solenoid was fired this long before
  // the extension began).
  double trigger_lead_s = 0.0;
};

class PointController {
 public:
  virtual ~PointController() = default;
  virtual PointCommand command(const PointWorld& w) = 0;
  // Called once per touchdown so the controller can re-plan (feedforward
  // pressure compensation reads the tank here).
  virtual void on_touchdown(const PointWorld&) {}
};

struct PointTraceRow {
  double t = 0, z = 0, v = 0;
  double f_motor = 0, f_pneu = 0;
  double tank_pa = 0, delta = 0;
  int phase = 0;  // 0 aerial, 1 descent, 2 ascent
  int valve = 0;
};

struct PointCycle {
  int cycle = 0;
  double touchdown_t = 0;
  double liftoff_t = 0;
  double apex_height_m = 0;  // above the fully extended standing height
  double v_liftoff = 0;
  double ke_liftoff_j = 0;
  double tank_pa_start = 0;
  double tank_pa_end = 0;
  double min_leg_m = 0;
  double joint_stop_loss_j = 0;
  bool released = false;
};

struct PointTrace {
  std::vector<PointTraceRow> rows;
  std::vector<PointCycle> cycles;
  bool diverged = false;
  std::string message;
};

// Start at apex height z0 (>= leg_max) in flight.
PointWorld make_point_world(const PointMassConfig& cfg, const TankState& tank,
                            double apex_z_m);

// n_cycles touchdown-delimited hops (or until the simulation settles /
// time cap / divergence).
PointTrace run_point_cycles(PointWorld& w, PointController& controller, int n_cycles);

// --- plan replay -----------------------------------------------------------

// Motor force as a function of leg length along one stance phase.
struct PhaseProfile {
  std::vector<double> leg_m;   // monotone grid
  std::vector<double> force_n;
  double eval(double L) const;  // clamped linear interpolation
  bool empty() const { return leg_m.empty(); }
};

// Replays optimizer force profiles with per-cycle feedforward pump
// compensation and the motor envelope; opens the valve on ascent according
// to the release policy.
class PlanReplayController : public PointController {
 public:
  struct Options {
    PhaseProfile descent;          // planned at plan_tank_pa
    PhaseProfile ascent;
    double plan_tank_pa = kAtmospherePa;
    bool greedy_ascent = false;    // ignore ascent profile, ride the envelope
    // valve policy
    bool release_enabled = false;
    double release_pressure_pa = 0.0;  // absolute; release once P >= this
    int release_cycle = -1;            // or at a fixed cycle (>0)
    int max_releases = 1;
    double trigger_lead_s = 0.0;       // pre-trigger modeled via delta(t+lead)
  };

  PlanReplayController(const PointMassConfig& cfg, Options opt);
  PointCommand command(const PointWorld& w) override;
  void on_touchdown(const PointWorld& w) override;

  int releases_done() const { return releases_done_; }

 private:
  PointMassConfig cfg_;
  Options opt_;
  double cycle_tank_pa_ = kAtmospherePa;
  int releases_done_ = 0;
  bool release_this_cycle_ = false;
};

// Net pump resistive force at leg length L for tank pressure P (helper shared
// by the replay compensation and the optimizer).
double net_pump_force_at(const PneumaticConfig& pneu, double tank_pa,
                         double tank_volume_m3, double leg_m);

// Net actuator push at leg length L with the transient factor delta.
double net_actuator_force_at(const PneumaticConfig& pneu, double tank_pa,
                             double tank_volume_m3, double leg_m, double delta);

}  // namespace hopper
