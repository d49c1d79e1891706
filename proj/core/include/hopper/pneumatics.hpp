#pragma once

// Pneumatic force laws for the pump / tank / actuator augmentation:
// two-stage pump resistance (theoretical Boyle model and data-driven
// piecewise fit), check-valve critical compression, quasi-static actuator
// force, solenoid transient, and the lumped prismatic-joint force.
//
// Conventions (fixed project-wide):
//   * pressures are absolute Pa internally; config/CLI speak gauge
//   * x  = pump compression distance from fully extended [m]
//   * d  = remaining pump length, d = stroke - x [m]
//   * rates follow the pump length: ddot >= 0 means extension

#include <optional>

namespace hopper {

inline constexpr double kAtmospherePa = 101325.0;

// Width of the end-of-stroke force taper on the actuator (the net push fades
// to zero over the last 2 mm instead of cutting off).
inline constexpr double kStrokeTaperM = 0.002;

struct PumpGeometry {
  double stage1_area_m2 = 1.5393804002589984e-4;  // 14 mm working diameter
  double stage2_area_m2 = 2.2698006922186255e-4;  // 17 mm working diameter
  double stroke_m = 0.130;
  double stage1_end_m = 0.050;    // compression distance where stage 1 ends (l1)
  double stage2_start_m = 0.065;  // compression distance where stage 2 begins (l2)
  // Initial chamber volume V0; <= 0 means "derive from composite geometry".
  double initial_volume_m3 = -1.0;

  // Single-area pump: both stages equal, V0 = A * stroke.
  static PumpGeometry single_area(double area_m2, double stroke_m);

  // Piston area at compression x. Stage 1 below l1, stage 2 from l2 on,
  // linear blend across the transition interval.
  double area_at(double compression_m) const;

  // Gas volume remaining in the chamber at compression x (integral of the
  // area over the remaining travel), so V(0) recovers V0 and equal areas
  // recover V = A * d.
  double chamber_volume(double compression_m) const;

  double initial_volume() const;

  void validate() const;  // throws std::invalid_argument listing violations
};

struct TankState {
  double pressure_pa = kAtmospherePa;  // absolute
  double volume_m3 = 1.939e-4;
  double atmospheric_pa = kAtmospherePa;

  double gauge_pa() const { return pressure_pa - atmospheric_pa; }
  void validate() const;
};

// Piecewise pump model, all segments in compression coordinate x.
//   stage 1      x <  l1 : m1*x + b1
//   transition   l1 <= x < l2 : m2*x + b2
//   stage 2      x >= l2, valve closed : c1*x^2 + c2*x + c3
//   valve open   remaining length <= d_C : F_closed(x_C) * (c4*x^2 + c5*x + c6)
struct PumpFitCoefficients {
  double m1 = 0, b1 = 0;
  double m2 = 0, b2 = 0;
  double c1 = 0, c2 = 0, c3 = 0;
  double c4 = 0, c5 = 0, c6 = 1.0;
};

struct ActuatorModel {
  double bore_area_m2 = 8.2957681008855492e-4;  // 32.5 mm bore
  double stroke_m = 0.1016;
  // Transient ODE k1*dd(delta) + k2*d(delta) + k3*delta = s_v(t), k3 = 1
  // normalization so the steady state is 1. Estimated defaults sized to the
  // tens-of-ms solenoid response scale.
  double k1 = 8.0e-4;
  double k2 = 4.8e-2;
  double k3 = 1.0;

  void validate() const;  // stability = positive coefficients for 2nd order
};

struct TransientState {
  double delta = 0.0;      // normalized force state
  double delta_dot = 0.0;  // 1/s
  bool valve_open = false;
  double time_since_trigger_s = 0.0;
};

// --- theoretical pump model -------------------------------------------------

// Eq-2-style resistive force before the check valve opens; remaining length d.
// Throws std::domain_error for d <= 0 (Boyle singularity) or d > stroke.
double theoretical_closed_force(const PumpGeometry& geom, const TankState& tank,
                                double remaining_m);

// Remaining length d_C at which pump pressure reaches tank pressure and the
// check valve opens. Equal-area geometry gives d_C = P0*V0 / (P_tank*A).
double critical_compression(const PumpGeometry& geom, const TankState& tank);

// Resistive force past the critical compression (pump and tank share volume).
// Requires 0 <= d <= d_C; continuous with the closed branch at d = d_C.
double theoretical_open_force(const PumpGeometry& geom, const TankState& tank,
                              double remaining_m);

// Theoretical compression force at compression x (closed or open branch as
// applicable). Convenience used by the simulators.
double theoretical_pump_force(const PumpGeometry& geom, const TankState& tank,
                              double compression_m);

struct ForceSlope {
  double f = 0;
  double dfdx = 0;  // derivative in the function's own coordinate
};

// Net (atmosphere-corrected) theoretical pump resistance with its slope in
// compression x. The check-valve branch switch is blended smoothly over a
// sub-millimeter band so the force field is C1 for the optimizer.
ForceSlope net_theoretical_pump(const PumpGeometry& geom, const TankState& tank,
                                double compression_m);

// Net actuator push per unit delta with its slope in extension e (gauge
// pressure force with the smooth end-of-stroke taper).
ForceSlope net_actuator_push(const ActuatorModel& act, const TankState& tank,
                             double extension_m);

// --- data-driven pump model ---------------------------------------------------

// Piecewise fitted force. compression_m in [0, stroke]; length_rate_mps is the
// pump-length rate (>= 0 means extension, which returns 0).
double fitted_pump_force(const PumpFitCoefficients& fit, const PumpGeometry& geom,
                         const TankState& tank, double compression_m,
                         double length_rate_mps);

// Fitted closed-branch value at an arbitrary compression (used for the open
// branch scale F_closed(x_C) and continuity checks).
double fitted_closed_branch(const PumpFitCoefficients& fit, double compression_m);

// --- tank updates -------------------------------------------------------------

// Isothermal tank pressure update after a stroke that reached x_deepest.
// No-op when the check valve never opened; pressure is non-decreasing.
TankState pump_stroke_tank_update(const PumpGeometry& geom, const TankState& tank,
                                  double deepest_compression_m);

// Tank pressure after the solenoid closes with the actuator at extension e
// (tank keeps its share of the equalized volume; actuator then vents).
TankState tank_release_update(const ActuatorModel& act, const TankState& tank,
                              double extension_at_close_m);

// --- actuator -----------------------------------------------------------------

// Quasi-static pushing force (Eq.-6 form) at extension d in [0, stroke].
double static_actuator_force(const ActuatorModel& act, const TankState& tank,
                             double extension_m);

// One RK4 step of the transient ODE; input is the valve step s_v.
TransientState step_transient(const TransientState& state, const ActuatorModel& act,
                              double dt_s);

// Closed-form unit-step response delta(t) (over-, critically-, under-damped).
double transient_step_response(const ActuatorModel& act, double t_s);

// Closed-form d(delta)/dt of the unit-step response.
double transient_step_response_rate(const ActuatorModel& act, double t_s);

// Time for the unit-step response to first reach `level` (default 0.9).
double transient_rise_time(const ActuatorModel& act, double level = 0.9);

// --- lumped prismatic force -----------------------------------------------------

enum class PumpModelKind { Theoretical, Fitted };

struct PneumaticConfig {
  PumpGeometry pump;
  ActuatorModel actuator;
  std::optional<PumpFitCoefficients> fit;
  PumpModelKind pump_model = PumpModelKind::Theoretical;

  double coulomb_friction_n = 0.0;   // extension friction, default disabled
  double valve_min_gauge_pa = 0.0;   // below this, s_v is forced to 0

  // Mounting: pump length = attachment length - mount_offset. The default
  // puts the pump fully extended when the attachments are 245 mm apart.
  double mount_offset_m = 0.115;

  double pump_length(double attachment_m) const;

  // Actuator extension measured from the pump-length origin: the pistons share
  // the prismatic joint, strokes differ, so the actuator tops out early.
  double actuator_extension(double pump_length_m) const;

  void validate() const;
};

// Lumped pneumatic joint force (Eq.-9 branching) along +d:
//   ddot < 0            -> pump resistance (fitted or theoretical)
//   ddot >= 0, s_v = 0  -> 0 (minus Coulomb friction if configured)
//   ddot >= 0, s_v = 1  -> F_static(e) * delta
// pump_length_m is the remaining pump length d.
double lumped_pneumatic_force(const PneumaticConfig& cfg, const TankState& tank,
                              const TransientState& transient, double pump_length_m,
                              double length_rate_mps, bool valve_open);

// Net force applied to the mechanism (atmosphere on the far piston face
// subtracted from the theoretical branches; fitted branch is already net).
// This is what the simulators and the optimizer integrate.
double net_pneumatic_force(const PneumaticConfig& cfg, const TankState& tank,
                           const TransientState& transient, double pump_length_m,
                           double length_rate_mps, bool valve_open);

}  // namespace hopper
