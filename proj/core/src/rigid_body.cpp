#include "hopper/rigid_body.hpp"

#include <cmath>
#include <sstream>

namespace hopper {

void RobotModel::validate() const {
  std::ostringstream bad;
  if (!(shank_length_m > 0 && thigh_length_m > 0)) bad << "link lengths must be > 0; ";
  if (!(base_mass_kg > 0 && thigh_mass_kg > 0 && shank_mass_kg > 0))
    bad << "masses must be > 0; ";
  if (!(thigh_inertia_kgm2 > 0 && shank_inertia_kgm2 > 0)) bad << "inertias must be > 0; ";
  if (!(belt_ratio > 0)) bad << "belt ratio must be > 0; ";
  if (!(motor_max_torque_nm > 0 && motor_max_speed_rads > 0))
    bad << "motor limits must be positive; ";
  if (!(attach_thigh_m > 0 && attach_shank_m > 0)) bad << "attachment offsets must be > 0; ";
  if (!(leg_length_min_m > 0 && leg_length_min_m < leg_length_max_m &&
        leg_length_max_m <= shank_length_m + thigh_length_m))
    bad << "leg length range invalid; ";
  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("RobotModel: " + msg);
}

namespace {

// Link direction for an absolute angle from straight down.
inline Vec2 link_dir(double th) { return {std::sin(th), -std::cos(th)}; }
inline Vec2 link_dir_d(double th) { return {std::cos(th), std::sin(th)}; }

}  // namespace

LegKinematics leg_kinematics(const RobotModel& model, const Vec4& q) {
  const double th1 = q(2), th2 = q(3);
  const double lt = model.thigh_length_m, ls = model.shank_length_m;

  LegKinematics out;
  const double c2 = std::cos(th2), s2 = std::sin(th2);
  out.leg_length = std::sqrt(lt * lt + ls * ls + 2.0 * lt * ls * c2);
  // angle of the hip-to-foot line = thigh angle + offset beta(q_knee)
  const double beta = std::atan2(ls * s2, lt + ls * c2);
  out.leg_angle = th1 + beta;

  out.dL_dq(3) = -lt * ls * s2 / out.leg_length;
  out.dqleg_dq(2) = 1.0;
  out.dqleg_dq(3) = ls * (ls + lt * c2) / (out.leg_length * out.leg_length);

  const double rt = model.attach_thigh_m, rs = model.attach_shank_m;
  out.attachment_length = std::sqrt(rt * rt + rs * rs + 2.0 * rt * rs * c2);
  out.dd_dq(3) = -rt * rs * s2 / out.attachment_length;

  out.near_singular = std::abs(s2) < 1e-6;
  return out;
}

Vec2 foot_position(const RobotModel& model, const Vec4& q) {
  const Vec2 hip(q(0), q(1));
  return hip + model.thigh_length_m * link_dir(q(2)) +
         model.shank_length_m * link_dir(q(2) + q(3));
}

Eigen::Matrix<double, 2, 4> foot_jacobian(const RobotModel& model, const Vec4& q) {
  const double lt = model.thigh_length_m, ls = model.shank_length_m;
  const Vec2 d1 = link_dir_d(q(2));
  const Vec2 d12 = link_dir_d(q(2) + q(3));
  Eigen::Matrix<double, 2, 4> J;
  J << 1, 0, lt * d1(0) + ls * d12(0), ls * d12(0),
       0, 1, lt * d1(1) + ls * d12(1), ls * d12(1);
  return J;
}

Vec2 foot_velocity(const RobotModel& model, const Vec4& q, const Vec4& qdot) {
  return foot_jacobian(model, q) * qdot;
}

namespace {

// d/dt of the foot Jacobian times qdot (constraint drift term).
Vec2 foot_jdot_qdot(const RobotModel& model, const Vec4& q, const Vec4& qdot) {
  const double lt = model.thigh_length_m, ls = model.shank_length_m;
  const double w1 = qdot(2), w12 = qdot(2) + qdot(3);
  // d/dt link_dir_d(th) = -link_dir(th)*... : derivative of (cos,sin) is (-sin,cos)*w
  const Vec2 dd1(-std::sin(q(2)) * w1, std::cos(q(2)) * w1);
  const Vec2 dd12(-std::sin(q(2) + q(3)) * w12, std::cos(q(2) + q(3)) * w12);
  return lt * dd1 * w1 + ls * dd12 * w12;
}

struct MassDerivs {
  Mat4 M;
  Mat4 dM_dth1;
  Mat4 dM_dth2;
};

MassDerivs mass_matrix(const RobotModel& m, const Vec4& q) {
  const double th1 = q(2), th2 = q(3);
  const double s1 = std::sin(th1), c1 = std::cos(th1);
  const double s12 = std::sin(th1 + th2), c12 = std::cos(th1 + th2);
  const double cth2 = std::cos(th2), sth2 = std::sin(th2);

  const double mb = m.base_mass_kg, mt = m.thigh_mass_kg, ms = m.shank_mass_kg;
  const double lt = m.thigh_length_m;
  const double ct = m.thigh_com_m, cs = m.shank_com_m;
  const double It = m.thigh_inertia_kgm2, Is = m.shank_inertia_kgm2;

  MassDerivs out;
  Mat4& M = out.M;
  M.setZero();
  const double mtot = mb + mt + ms;
  M(0, 0) = mtot;
  M(1, 1) = mtot;
  M(0, 2) = mt * ct * c1 + ms * (lt * c1 + cs * c12);
  M(1, 2) = mt * ct * s1 + ms * (lt * s1 + cs * s12);
  M(0, 3) = ms * cs * c12;
  M(1, 3) = ms * cs * s12;
  M(2, 2) = mt * ct * ct + It + ms * (lt * lt + cs * cs + 2.0 * lt * cs * cth2) + Is;
  M(2, 3) = ms * (cs * cs + lt * cs * cth2) + Is;
  M(3, 3) = ms * cs * cs + Is;
  M(2, 0) = M(0, 2); M(2, 1) = M(1, 2);
  M(3, 0) = M(0, 3); M(3, 1) = M(1, 3);
  M(3, 2) = M(2, 3);

  Mat4& D1 = out.dM_dth1;
  D1.setZero();
  D1(0, 2) = -(mt * ct * s1 + ms * (lt * s1 + cs * s12));
  D1(1, 2) = mt * ct * c1 + ms * (lt * c1 + cs * c12);
  D1(0, 3) = -ms * cs * s12;
  D1(1, 3) = ms * cs * c12;
  D1(2, 0) = D1(0, 2); D1(2, 1) = D1(1, 2);
  D1(3, 0) = D1(0, 3); D1(3, 1) = D1(1, 3);

  Mat4& D2 = out.dM_dth2;
  D2.setZero();
  D2(0, 2) = -ms * cs * s12;
  D2(1, 2) = ms * cs * c12;
  D2(0, 3) = -ms * cs * s12;
  D2(1, 3) = ms * cs * c12;
  D2(2, 2) = -2.0 * ms * lt * cs * sth2;
  D2(2, 3) = -ms * lt * cs * sth2;
  D2(2, 0) = D2(0, 2); D2(2, 1) = D2(1, 2);
  D2(3, 0) = D2(0, 3); D2(3, 1) = D2(1, 3);
  D2(3, 2) = D2(2, 3);
  return out;
}

}  // namespace

DynamicsTerms dynamics_terms(const RobotModel& model, const RobotState& state) {
  const Vec4& q = state.q;
  const Vec4& qd = state.qdot;
  const auto md = mass_matrix(model, q);

  DynamicsTerms out;
  out.M = md.M;

  // Christoffel Coriolis matrix: C_ij = 1/2 sum_k (dM_ij/dq_k + dM_ik/dq_j -
  // dM_jk/dq_i) qd_k. M depends only on q(2), q(3).
  const Mat4* dM[4] = {nullptr, nullptr, &md.dM_dth1, &md.dM_dth2};
  Mat4& Cm = out.C_mat;
  Cm.setZero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double cij = 0.0;
      for (int k = 2; k < 4; ++k)
        cij += 0.5 * (*dM[k])(i, j) * qd(k);
      for (int k = 0; k < 4; ++k) {
        const double dMik_dqj = (j >= 2) ? (*dM[j])(i, k) : 0.0;
        const double dMjk_dqi = (i >= 2) ? (*dM[i])(j, k) : 0.0;
        cij += 0.5 * (dMik_dqj - dMjk_dqi) * qd(k);
      }
      Cm(i, j) = cij;
    }
  }
  out.C = Cm * qd;

  const double th1 = q(2), th2 = q(3);
  const double s1 = std::sin(th1), s12 = std::sin(th1 + th2);
  const double g = model.gravity;
  out.G(0) = 0.0;
  out.G(1) = model.total_mass() * g;
  out.G(2) = g * (model.thigh_mass_kg * model.thigh_com_m * s1 +
                  model.shank_mass_kg *
                      (model.thigh_length_m * s1 + model.shank_com_m * s12));
  out.G(3) = g * model.shank_mass_kg * model.shank_com_m * s12;

  out.B_m(2, 0) = 1.0;
  out.B_m(3, 1) = model.knee_drive_ratio();
  out.B_p = leg_kinematics(model, q).dd_dq;

  if (state.mode == ContactMode::Stance) {
    out.J_h = foot_jacobian(model, q);
    out.Jdot_qdot = foot_jdot_qdot(model, q, qd);
  } else {
    out.J_h.resize(0, 4);
    out.Jdot_qdot.resize(0);
  }
  return out;
}

Eigen::VectorXd kkt_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& J,
                          const Eigen::VectorXd& top, const Eigen::VectorXd& bottom) {
  const int n = static_cast<int>(M.rows());
  const int m = static_cast<int>(J.rows());
  Eigen::MatrixXd K(n + m, n + m);
  K.setZero();
  K.topLeftCorner(n, n) = M;
  K.topRightCorner(n, m) = -J.transpose();
  K.bottomLeftCorner(m, n) = J;
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = top;
  rhs.tail(m) = bottom;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible())
    throw std::runtime_error("singular contact configuration (KKT block not invertible)");
  return lu.solve(rhs);
}

ConstrainedAccel constrained_accel(const RobotModel& model, const RobotState& state,
                                   const Vec2& tau_m, double f_pneu) {
  if (state.mode != ContactMode::Stance)
    throw std::logic_error("constrained_accel requires stance mode");
  const DynamicsTerms t = dynamics_terms(model, state);
  const Vec4 forces = t.B_m * tau_m + t.B_p * f_pneu - t.C - t.G;
  const Eigen::VectorXd sol = kkt_solve(t.M, t.J_h, forces, -t.Jdot_qdot);
  ConstrainedAccel out;
  out.qddot = sol.head<4>();
  out.contact_force = sol.tail<2>();
  return out;
}

Vec4 aerial_accel(const RobotModel& model, const RobotState& state, const Vec2& tau_m,
                  double f_pneu) {
  const DynamicsTerms t = dynamics_terms(model, state);
  const Vec4 forces = t.B_m * tau_m + t.B_p * f_pneu - t.C - t.G;
  return t.M.ldlt().solve(forces);
}

ImpactResult impact_map(const RobotModel& model, const RobotState& state_pre) {
  RobotState st = state_pre;
  st.mode = ContactMode::Stance;
  const DynamicsTerms t = dynamics_terms(model, st);
  const Eigen::VectorXd sol =
      kkt_solve(t.M, t.J_h, t.M * state_pre.qdot, Eigen::VectorXd::Zero(2));
  ImpactResult out;
  out.qdot_post = sol.head<4>();
  out.impulse = sol.tail<2>();
  return out;
}

double kinetic_energy(const RobotModel& model, const RobotState& state) {
  const auto md = dynamics_terms(model, state);
  return 0.5 * state.qdot.dot(md.M * state.qdot);
}

double potential_energy(const RobotModel& model, const RobotState& state) {
  const Vec4& q = state.q;
  const double c1 = std::cos(q(2)), c12 = std::cos(q(2) + q(3));
  const double z_t = q(1) - model.thigh_com_m * c1;
  const double z_s = q(1) - model.thigh_length_m * c1 - model.shank_com_m * c12;
  return model.gravity * (model.base_mass_kg * q(1) + model.thigh_mass_kg * z_t +
                          model.shank_mass_kg * z_s);
}

double projected_mass(double boom_inertia_kgm2, double boom_radius_m,
                      double robot_mass_kg) {
  if (!(boom_radius_m > 0) || boom_inertia_kgm2 < 0 || !(robot_mass_kg > 0))
    throw std::invalid_argument("projected_mass: inputs must be positive");
  return robot_mass_kg + boom_inertia_kgm2 / (boom_radius_m * boom_radius_m);
}

}  // namespace hopper
