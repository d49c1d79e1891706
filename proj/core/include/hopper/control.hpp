#pragma once

// Feedback control stack: apex foot placement, task-space PD for the aerial
// leg, stance task-space force control with the Bezier horizontal profile,
// binary stance/aerial blending, and the motor voltage map.

#include <optional>

#include "hopper/point_mass.hpp"
#include "hopper/rigid_body.hpp"
#include "hopper/sim.hpp"
#include "hopper/trajopt.hpp"

namespace hopper {

struct ControllerConfig {
  double foot_kp = 0.10;   // s/m -> rad per (m/s) velocity error
  double foot_kd = 0.05;
  double v_desired_mps = 0.0;
  double leg_angle_limit_rad = 0.5;
  double leg_length_des_m = 0.245;  // aerial target: maximum leg length
  // task-space gains on y = [q_leg (rad), L (m)]
  double kp_angle = 8.0, kd_angle = 0.4;    // N*m per rad, N*m*s per rad
  double kp_length = 800.0, kd_length = 30.0;  // N per m, N*s per m
  double bezier_peak_gain = 40.0;  // N per (m/s) of desired forward speed
  bool use_jacobian_inverse = false;  // default: transpose-with-gains
  double singular_damping = 1e-3;
};

struct MotorParams {
  double resistance_ohm = 1.0;       // estimated, not from the paper
  double torque_constant_nmpa = 0.01;
  double gear_ratio = 19.2;
  double k_e_vspr = 0.0;  // electrical constant; ~0 per the conservative model
  double supply_v = 24.0;

  void validate() const;
};

// Apex foot-placement law; returns the desired leg angle, clamped.
double foot_placement(double v_apex, double v_prev, const ControllerConfig& cfg);

// Task-space PD on y = [q_leg, L]; returns joint torques (hip, knee joint).
// Falls back to a damped inverse near the straight-leg singularity when the
// inverse map is selected; `flagged` reports that path.
Vec2 aerial_torques(const RobotModel& model, const RobotState& state,
                    const Vec2& y_des, const Vec2& ydot_des,
                    const ControllerConfig& cfg, bool* flagged = nullptr);

// Joint torques realizing a desired ground reaction (F_x, F_z) on the robot,
// quasi-statically: tau = -J_joint^T * F  (J_joint = foot-wrt-hip Jacobian).
Vec2 stance_torques(const RobotModel& model, const RobotState& state,
                    double f_vertical_n, double f_horizontal_n);

// Degree-4 Bezier horizontal force profile; zero at both ends, peak at T/2
// equal to gain * v_desired.
double bezier_horizontal_profile(double v_desired, double peak_gain,
                                 double stance_duration_s, double t_s);

// Convex stance/aerial combination with the binary contact indicator.
Vec2 blend(const Vec2& tau_stance, const Vec2& tau_aerial, double alpha);

// PWM voltage for a commanded motor torque at joint speed thetadot.
double motor_voltage(double tau_nm, double thetadot_rads, const MotorParams& p);

// --- whole-body hopping controller -------------------------------------------

struct ValvePolicy {
  bool release_enabled = false;
  double release_pressure_pa = 0.0;
  int release_cycle = -1;
  int max_releases = 1;
};

// Realizes planned hops on the full model: aerial task-space PD toward the
// foot-placement target, stance replay of the optimized force profile with
// per-cycle pump compensation, Bezier horizontal assist, binary blending.
class HoppingController : public Controller {
 public:
  HoppingController(ControllerConfig cfg, const TrajSolution& plan,
                    ValvePolicy valve = {});

  ControlCommand command(const World& w) override;

  const ControllerConfig& config() const { return cfg_; }

 private:
  ControllerConfig cfg_;
  TrajSolution plan_;
  PhaseProfile descent_;
  PhaseProfile ascent_;
  ValvePolicy valve_;
  int last_cycle_ = -1;
  double cycle_pressure_pa_ = kAtmospherePa;
  double stance_start_s_ = 0.0;
  int releases_done_ = 0;
  bool release_this_cycle_ = false;
};

}  // namespace hopper
