#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hopper/rigid_body.hpp"
#include "hopper/rng.hpp"

using namespace hopper;

namespace {

RobotModel model() {
  RobotModel m;
  m.validate();
  return m;
}

Vec4 random_q(Rng& rng) {
  Vec4 q;
  q << 2.0 * rng.uniform01() - 1.0, 0.2 + 0.5 * rng.uniform01(),
      1.2 * rng.uniform01() - 0.6, 0.4 + 1.6 * rng.uniform01();
  return q;
}

Vec4 random_qd(Rng& rng) {
  Vec4 qd;
  for (int i = 0; i < 4; ++i) qd(i) = 4.0 * rng.uniform01() - 2.0;
  return qd;
}

}  // namespace

TEST_CASE("leg kinematics closed forms") {
  const RobotModel m = model();
  Vec4 q = Vec4::Zero();
  q(1) = 0.3;

  // straight leg: L = l_s + l_t
  auto kin = leg_kinematics(m, q);
  CHECK(kin.leg_length == doctest::Approx(0.250).epsilon(1e-12));
  CHECK(kin.leg_angle == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kin.near_singular);

  // interior 90 degrees between the links
  q(3) = M_PI / 2.0;
  kin = leg_kinematics(m, q);
  CHECK(kin.leg_length == doctest::Approx(std::sqrt(0.0325)).epsilon(1e-12));
  CHECK_FALSE(kin.near_singular);

  // default attachments at hip and foot: d equals L
  CHECK(kin.attachment_length == doctest::Approx(kin.leg_length).epsilon(1e-12));
}

TEST_CASE("analytic kinematic jacobians match finite differences") {
  const RobotModel m = model();
  Rng rng(1234);
  const double h = 1e-7;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec4 q = random_q(rng);
    const auto kin = leg_kinematics(m, q);
    for (int j = 0; j < 4; ++j) {
      Vec4 qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      const auto kp = leg_kinematics(m, qp);
      const auto km = leg_kinematics(m, qm);
      const double dL = (kp.leg_length - km.leg_length) / (2 * h);
      const double dq = (kp.leg_angle - km.leg_angle) / (2 * h);
      const double dd = (kp.attachment_length - km.attachment_length) / (2 * h);
      CHECK(kin.dL_dq(j) == doctest::Approx(dL).epsilon(1e-6));
      CHECK(kin.dqleg_dq(j) == doctest::Approx(dq).epsilon(1e-6));
      CHECK(kin.dd_dq(j) == doctest::Approx(dd).epsilon(1e-6));
    }
    // foot jacobian columns vs finite differences
    const auto J = foot_jacobian(m, q);
    for (int j = 0; j < 4; ++j) {
      Vec4 qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      const Vec2 fd = (foot_position(m, qp) - foot_position(m, qm)) / (2 * h);
      CHECK(J(0, j) == doctest::Approx(fd(0)).epsilon(1e-6));
      CHECK(J(1, j) == doctest::Approx(fd(1)).epsilon(1e-6));
    }
  }
}

TEST_CASE("mass matrix structure over random states") {
  const RobotModel m = model();
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    RobotState st;
    st.q = random_q(rng);
    st.qdot = random_qd(rng);
    const auto t = dynamics_terms(m, st);

    CHECK((t.M - t.M.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
    Eigen::LLT<Mat4> llt(t.M);
    CHECK(llt.info() == Eigen::Success);  // positive definite

    // Mdot - 2C skew symmetry of the Christoffel bias
    const double h = 1e-7;
    RobotState sp = st, sm = st;
    sp.q += h * st.qdot;
    sm.q -= h * st.qdot;
    const Mat4 Mdot =
        (dynamics_terms(m, sp).M - dynamics_terms(m, sm).M) / (2 * h);
    const Mat4 S = Mdot - 2.0 * t.C_mat;
    CHECK((S + S.transpose()).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("statics: gravity vector and bias at rest") {
  const RobotModel m = model();
  RobotState st;
  st.q << 0.0, 0.4, 0.0, 0.0;  // straight down, at rest
  const auto t = dynamics_terms(m, st);
  CHECK(t.C.norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(t.G(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(t.G(1) == doctest::Approx(m.total_mass() * m.gravity).epsilon(1e-12));
  CHECK(t.G(2) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(t.G(3) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("constrained acceleration: statics and residuals") {
  const RobotModel m = model();
  Rng rng(991);

  // static equilibrium with the foot pinned: solve for the torques that hold
  // the posture, then check qddot ~ 0 and F_z = supported weight
  RobotState st;
  st.q << 0.0, 0.0, -0.25, 0.9;
  st.mode = ContactMode::Stance;
  // place hip so the foot is at the ground
  const Vec2 foot = foot_position(m, st.q);
  st.q(1) -= foot(1);

  // at rest with zero input the foot stays pinned and the constraint residual
  // vanishes
  const auto t = dynamics_terms(m, st);
  const auto acc = constrained_accel(m, st, Vec2::Zero(), 0.0);
  const Eigen::VectorXd resid = t.J_h * acc.qddot + t.Jdot_qdot;
  CHECK(resid.lpNorm<Eigen::Infinity>() < 1e-9);

  // vertical contact force carries the weight at rest (zero joint torque
  // cannot hold the posture, but the instantaneous vertical reaction plus
  // vertical acceleration must balance gravity)
  const double fz = acc.contact_force(1);
  CHECK(fz > 0.0);
  CHECK(fz < 2.0 * m.total_mass() * m.gravity);

  // random stance states: residual always below 1e-9
  for (int trial = 0; trial < 50; ++trial) {
    RobotState s2;
    s2.q = random_q(rng);
    s2.qdot = random_qd(rng);
    s2.mode = ContactMode::Stance;
    const auto t2 = dynamics_terms(m, s2);
    const Vec2 tau(2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0);
    const auto a2 = constrained_accel(m, s2, tau, 10.0 * rng.uniform01());
    const Eigen::VectorXd r2 = t2.J_h * a2.qddot + t2.Jdot_qdot;
    CHECK(r2.lpNorm<Eigen::Infinity>() < 1e-9);
  }

  // aerial: x acceleration is zero under zero input
  RobotState air;
  air.q << 0.0, 0.5, 0.1, 0.8;
  air.mode = ContactMode::Aerial;
  const Vec4 qdd = aerial_accel(m, air, Vec2::Zero(), 0.0);
  CHECK(qdd(0) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("impact map properties") {
  const RobotModel m = model();

  // 1-DoF analog: 2 kg falling at 1 m/s against a full constraint
  Eigen::MatrixXd M1(1, 1), J1(1, 1);
  M1 << 2.0;
  J1 << 1.0;
  Eigen::VectorXd qd(1);
  qd << -1.0;
  const Eigen::VectorXd sol = kkt_solve(M1, J1, M1 * qd, Eigen::VectorXd::Zero(1));
  CHECK(sol(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(sol(1) == doctest::Approx(2.0).epsilon(1e-14));

  Rng rng(4242);
  for (int trial = 0; trial < 1000; ++trial) {
    RobotState st;
    st.q = random_q(rng);
    st.qdot = random_qd(rng);
    st.mode = ContactMode::Aerial;

    const double ke_pre = kinetic_energy(m, st);
    const auto imp = impact_map(m, st);

    // post-impact velocity lies in the constraint null space
    RobotState post = st;
    post.qdot = imp.qdot_post;
    post.mode = ContactMode::Stance;
    const auto t = dynamics_terms(m, post);
    CHECK((t.J_h * imp.qdot_post).lpNorm<Eigen::Infinity>() < 1e-9);

    // plastic impact never adds energy
    const double ke_post = kinetic_energy(m, post);
    CHECK(ke_post <= ke_pre * (1.0 + 1e-12) + 1e-12);

    // idempotence
    const auto imp2 = impact_map(m, post);
    CHECK((imp2.qdot_post - imp.qdot_post).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  // pre-impact velocity already satisfying the constraint passes through
  RobotState st;
  st.q << 0.0, 0.2, -0.2, 1.0;
  st.qdot.setZero();
  const auto imp = impact_map(m, st);
  CHECK(imp.qdot_post.norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(imp.impulse.norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("aerial energy conservation under zero input") {
  const RobotModel m = model();
  RobotState st;
  st.q << 0.0, 0.6, 0.15, 0.9;
  st.qdot << 0.3, 0.8, -1.0, 2.0;
  st.mode = ContactMode::Aerial;

  const double e0 = kinetic_energy(m, st) + potential_energy(m, st);
  const double dt = 1e-5;
  for (int i = 0; i < 10000; ++i) {  // 0.1 s
    auto f = [&](const RobotState& s) { return aerial_accel(m, s, Vec2::Zero(), 0.0); };
    const Vec4 k1q = st.qdot, k1v = f(st);
    RobotState s2 = st;
    s2.q = st.q + 0.5 * dt * k1q;
    s2.qdot = st.qdot + 0.5 * dt * k1v;
    const Vec4 k2q = s2.qdot, k2v = f(s2);
    RobotState s3 = st;
    s3.q = st.q + 0.5 * dt * k2q;
    s3.qdot = st.qdot + 0.5 * dt * k2v;
    const Vec4 k3q = s3.qdot, k3v = f(s3);
    RobotState s4 = st;
    s4.q = st.q + dt * k3q;
    s4.qdot = st.qdot + dt * k3v;
    const Vec4 k4q = s4.qdot, k4v = f(s4);
    st.q += dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    st.qdot += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  const double e1 = kinetic_energy(m, st) + potential_energy(m, st);
  CHECK(std::abs(e1 - e0) < 1e-6);
}

TEST_CASE("projected mass") {
  CHECK(projected_mass(0.0, 1.0, 2.2) == doctest::Approx(2.2));
  CHECK(projected_mass(0.5, 1.0, 2.2) == doctest::Approx(2.7));
  // the platform-jump configuration: lighter perceived weight
  CHECK(projected_mass(0.0, 1.2, 1.9) == doctest::Approx(1.9));
  CHECK_THROWS_AS(projected_mass(0.1, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("model validation rejects bad parameters") {
  RobotModel bad = model();
  bad.thigh_mass_kg = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  RobotModel bad2 = model();
  bad2.leg_length_max_m = 0.3;  // beyond l_s + l_t
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}
