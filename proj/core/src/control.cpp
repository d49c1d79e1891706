#include "hopper/control.hpp"

#include <algorithm>
#include <cmath>

namespace hopper {

void MotorParams::validate() const {
  if (!(resistance_ohm > 0 && torque_constant_nmpa > 0 && gear_ratio > 0))
    throw std::invalid_argument("MotorParams: R, k_T, N must be > 0");
  if (k_e_vspr < 0) throw std::invalid_argument("MotorParams: k_e must be >= 0");
}

double foot_placement(double v_apex, double v_prev, const ControllerConfig& cfg) {
  const double q = cfg.foot_kp * (v_apex - cfg.v_desired_mps) +
                   cfg.foot_kd * (v_apex - v_prev);
  return std::clamp(q, -cfg.leg_angle_limit_rad, cfg.leg_angle_limit_rad);
}

Vec2 aerial_torques(const RobotModel& model, const RobotState& state,
                    const Vec2& y_des, const Vec2& ydot_des,
                    const ControllerConfig& cfg, bool* flagged) {
  const LegKinematics kin = leg_kinematics(model, state.q);
  Eigen::Matrix2d Jy;  // rows: q_leg, L; columns: q_hip, q_knee
  Jy << kin.dqleg_dq(2), kin.dqleg_dq(3),
        kin.dL_dq(2), kin.dL_dq(3);

  const Vec2 y(kin.leg_angle, kin.leg_length);
  const Vec2 ydot(kin.dqleg_dq.dot(state.qdot), kin.dL_dq.dot(state.qdot));
  Eigen::Matrix2d Kp, Kd;
  Kp << cfg.kp_angle, 0, 0, cfg.kp_length;
  Kd << cfg.kd_angle, 0, 0, cfg.kd_length;
  // gains stored positive, negative feedback written out
  const Vec2 f_task = -(Kp * (y - y_des)) - Kd * (ydot - ydot_des);

  bool used_damped = false;
  Vec2 tau;
  if (cfg.use_jacobian_inverse) {
    const double det = Jy.determinant();
    if (std::abs(det) < 1e-4) {
      used_damped = true;
      const Eigen::Matrix2d JJt = Jy * Jy.transpose() +
                                  cfg.singular_damping * Eigen::Matrix2d::Identity();
      tau = Jy.transpose() * JJt.inverse() * f_task;
    } else {
      tau = Jy.inverse() * f_task;
    }
  } else {
    tau = Jy.transpose() * f_task;
    used_damped = kin.near_singular;
  }
  if (flagged) *flagged = used_damped;
  return tau;
}

Vec2 stance_torques(const RobotModel& model, const RobotState& state,
                    double f_vertical_n, double f_horizontal_n) {
  const auto J = foot_jacobian(model, state.q);
  Eigen::Matrix2d Jj;  // foot-wrt-hip Jacobian (joint columns)
  Jj << J(0, 2), J(0, 3),
        J(1, 2), J(1, 3);
  const Vec2 f(f_horizontal_n, f_vertical_n);
  return -Jj.transpose() * f;
}

double bezier_horizontal_profile(double v_desired, double peak_gain,
                                 double stance_duration_s, double t_s) {
  if (stance_duration_s <= 0.0) return 0.0;
  const double s = std::clamp(t_s / stance_duration_s, 0.0, 1.0);
  // degree-4 Bezier with P0 = P4 = 0 and P1 = P2 = P3 = 8/7 * peak, which
  // puts the maximum (= peak) at s = 1/2
  const double p = 8.0 / 7.0 * peak_gain * v_desired;
  const double u = 1.0 - s;
  const double b = 4.0 * u * u * u * s + 6.0 * u * u * s * s + 4.0 * u * s * s * s;
  return p * b;
}

Vec2 blend(const Vec2& tau_stance, const Vec2& tau_aerial, double alpha) {
  return alpha * tau_stance + (1.0 - alpha) * tau_aerial;
}

double motor_voltage(double tau_nm, double thetadot_rads, const MotorParams& p) {
  const double v = p.resistance_ohm / (p.torque_constant_nmpa * p.gear_ratio) * tau_nm +
                   p.k_e_vspr * p.gear_ratio * thetadot_rads;
  return std::clamp(v, -p.supply_v, p.supply_v);
}

HoppingController::HoppingController(ControllerConfig cfg, const TrajSolution& plan,
                                     ValvePolicy valve)
    : cfg_(cfg), plan_(plan), descent_(descent_profile(plan)),
      ascent_(ascent_profile(plan)), valve_(valve) {}

ControlCommand HoppingController::command(const World& w) {
  // per-cycle bookkeeping at touchdown
  if (w.cycle != last_cycle_) {
    last_cycle_ = w.cycle;
    cycle_pressure_pa_ = w.tank.pressure_pa;
    stance_start_s_ = w.time_s;
    release_this_cycle_ = false;
    if (valve_.release_enabled && releases_done_ < valve_.max_releases) {
      if (valve_.release_cycle > 0)
        release_this_cycle_ = w.cycle >= valve_.release_cycle;
      else
        release_this_cycle_ = cycle_pressure_pa_ >= valve_.release_pressure_pa;
    }
  }

  const LegKinematics kin = leg_kinematics(w.model, w.state.q);
  const double ddot = kin.dd_dq.dot(w.state.qdot);

  // aerial branch: PD toward the foot-placement target at full leg length
  const double q_leg_des =
      foot_placement(w.last_apex_xdot, w.prev_apex_xdot, cfg_);
  const Vec2 y_des(q_leg_des, cfg_.leg_length_des_m);
  const Vec2 tau_aerial_joint =
      aerial_torques(w.model, w.state, y_des, Vec2::Zero(), cfg_);

  // stance branch: replay the planned vertical force with pump compensation
  double f_m;
  if (ddot < 0.0) {
    f_m = descent_.eval(kin.leg_length) +
          net_pump_force_at(w.pneu, plan_.plan_tank_pa, w.tank.volume_m3,
                            kin.leg_length) -
          net_pump_force_at(w.pneu, cycle_pressure_pa_, w.tank.volume_m3,
                            kin.leg_length);
    f_m = std::max(0.0, f_m);
  } else {
    f_m = std::max(0.0, ascent_.eval(kin.leg_length));
  }
  const double t_stance = w.time_s - stance_start_s_;
  const double f_x =
      bezier_horizontal_profile(cfg_.v_desired_mps, cfg_.bezier_peak_gain,
                                plan_.T_desc + plan_.T_asc, t_stance);
  const Vec2 tau_stance_joint = stance_torques(w.model, w.state, f_m, f_x);

  const double alpha = w.alpha_measured ? 1.0 : 0.0;
  const Vec2 tau_joint = blend(tau_stance_joint, tau_aerial_joint, alpha);

  ControlCommand cmd;
  cmd.tau_motor(0) = tau_joint(0);
  cmd.tau_motor(1) = tau_joint(1) / w.model.knee_drive_ratio();
  const double cap = w.model.motor_max_torque_nm;
  cmd.tau_motor(0) = std::clamp(cmd.tau_motor(0), -cap, cap);
  cmd.tau_motor(1) = std::clamp(cmd.tau_motor(1), -cap, cap);

  cmd.valve_open = false;
  if (release_this_cycle_ && w.state.mode == ContactMode::Stance && ddot >= 0.0) {
    cmd.valve_open = true;
    if (!w.transient.valve_open) releases_done_ += 1;
  } else if (w.transient.valve_open && w.state.mode == ContactMode::Stance) {
    cmd.valve_open = true;  // hold through the ascent, close at liftoff
  }
  return cmd;
}

}  // namespace hopper
