#pragma once

// Planar kinematics and constrained dynamics of the hopper.
//
// Generalized coordinates q = [x_hip, z_hip, q_hip, q_knee]:
//   q_hip  = absolute thigh angle from straight down (leg under the hip at 0)
//   q_knee = shank angle relative to the thigh (0 = straight leg)
// The pump/actuator pair acts along the line between its two attachment
// points (one on the thigh, one on the shank), reduced analytically to a
// function of q_knee, so no loop-closure rows appear in the constraints.

#include <Eigen/Dense>

#include <stdexcept>

namespace hopper {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

enum class ContactMode { Aerial, Stance };

struct RobotModel {
  double shank_length_m = 0.100;
  double thigh_length_m = 0.150;

  // Estimated mass split (only the 2.2 kg perceived total is from the paper).
  double base_mass_kg = 1.90;
  double thigh_mass_kg = 0.18;
  double shank_mass_kg = 0.12;
  double thigh_inertia_kgm2 = 3.375e-4;  // rod about COM
  double shank_inertia_kgm2 = 1.0e-4;
  double thigh_com_m = 0.075;  // from hip along the thigh
  double shank_com_m = 0.050;  // from knee along the shank

  double belt_ratio = 1.5;
  int knee_motor_count = 2;
  double motor_max_torque_nm = 3.728;
  double motor_max_speed_rads = 223.0 * 2.0 * M_PI / 60.0;

  // Pneumatic attachment points, measured from the knee along each link.
  // Defaults place them at the hip and the foot so the joint length equals
  // the leg length.
  double attach_thigh_m = 0.150;
  double attach_shank_m = 0.100;

  double projected_mass_kg = 2.2;  // m-tilde used by the point-mass planner
  double gravity = 9.81;

  double leg_length_min_m = 0.145;
  double leg_length_max_m = 0.245;

  double total_mass() const { return base_mass_kg + thigh_mass_kg + shank_mass_kg; }
  double knee_drive_ratio() const { return belt_ratio * knee_motor_count; }
  void validate() const;
};

struct RobotState {
  Vec4 q = Vec4::Zero();     // [x, z, q_hip, q_knee]
  Vec4 qdot = Vec4::Zero();
  ContactMode mode = ContactMode::Aerial;
};

struct LegKinematics {
  double leg_length = 0.0;       // hip-to-foot distance L
  double leg_angle = 0.0;        // hip-to-foot line angle from vertical
  double attachment_length = 0.0;  // pneumatic joint length d
  Vec4 dL_dq = Vec4::Zero();
  Vec4 dqleg_dq = Vec4::Zero();
  Vec4 dd_dq = Vec4::Zero();
  bool near_singular = false;    // straight-leg Jacobian degeneracy
};

struct DynamicsTerms {
  Mat4 M = Mat4::Zero();
  Eigen::Matrix4d C_mat = Mat4::Zero();  // Coriolis matrix (Christoffel)
  Vec4 C = Vec4::Zero();                 // bias force vector C_mat * qdot
  Vec4 G = Vec4::Zero();
  Eigen::Matrix<double, 4, 2> B_m = Eigen::Matrix<double, 4, 2>::Zero();
  Vec4 B_p = Vec4::Zero();
  Eigen::MatrixXd J_h;          // contact rows (2x4 in stance, 0x4 aerial)
  Eigen::VectorXd Jdot_qdot;    // constraint drift term
};

LegKinematics leg_kinematics(const RobotModel& model, const Vec4& q);

Vec2 foot_position(const RobotModel& model, const Vec4& q);
Vec2 foot_velocity(const RobotModel& model, const Vec4& q, const Vec4& qdot);
Eigen::Matrix<double, 2, 4> foot_jacobian(const RobotModel& model, const Vec4& q);

DynamicsTerms dynamics_terms(const RobotModel& model, const RobotState& state);

struct ConstrainedAccel {
  Vec4 qddot = Vec4::Zero();
  Vec2 contact_force = Vec2::Zero();  // world-frame force on the foot
};

// Stance KKT solve; tau_m = (hip motor, knee motor) torques (motor side),
// f_pneu = net prismatic force along +d. Throws on singular configurations.
ConstrainedAccel constrained_accel(const RobotModel& model, const RobotState& state,
                                   const Vec2& tau_m, double f_pneu);

// Aerial (unconstrained) forward dynamics.
Vec4 aerial_accel(const RobotModel& model, const RobotState& state, const Vec2& tau_m,
                  double f_pneu);

struct ImpactResult {
  Vec4 qdot_post = Vec4::Zero();
  Vec2 impulse = Vec2::Zero();
};

// Plastic impact: momentum-consistent velocity reset with the contact rows
// active; J_h * qdot_post = 0 and kinetic energy never increases.
ImpactResult impact_map(const RobotModel& model, const RobotState& state_pre);

// Generic block solves shared by constrained_accel / impact_map; exposed so
// low-dimensional analogs can be checked directly.
Eigen::VectorXd kkt_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& J,
                          const Eigen::VectorXd& top, const Eigen::VectorXd& bottom);

double kinetic_energy(const RobotModel& model, const RobotState& state);
double potential_energy(const RobotModel& model, const RobotState& state);

// Effective translational mass of robot plus boom (equivalent kinetic energy).
double projected_mass(double boom_inertia_kgm2, double boom_radius_m,
                      double robot_mass_kg);

}  // namespace hopper
