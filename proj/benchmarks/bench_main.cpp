#include <benchmark/benchmark.h>

#include "hopper/pneumatics.hpp"
#include "hopper/rigid_body.hpp"
#include "hopper/sim.hpp"
#include "hopper/trajopt.hpp"

using namespace hopper;

static void BM_DynamicsTerms(benchmark::State& state) {
  RobotModel m;
  RobotState st;
  st.q << 0.1, 0.3, -0.2, 0.9;
  st.qdot << 0.4, -1.1, 2.0, -0.7;
  st.mode = ContactMode::Stance;
  for (auto _ : state) benchmark::DoNotOptimize(dynamics_terms(m, st));
}
BENCHMARK(BM_DynamicsTerms);

static void BM_ConstrainedAccel(benchmark::State& state) {
  RobotModel m;
  RobotState st;
  st.q << 0.1, 0.12, -0.2, 0.9;
  st.qdot << 0.4, -1.1, 2.0, -0.7;
  st.mode = ContactMode::Stance;
  const Vec2 tau(1.0, -0.5);
  for (auto _ : state) benchmark::DoNotOptimize(constrained_accel(m, st, tau, 25.0));
}
BENCHMARK(BM_ConstrainedAccel);

static void BM_PneumaticForce(benchmark::State& state) {
  PneumaticConfig cfg;
  TankState tank;
  tank.pressure_pa = 2.5 * kAtmospherePa;
  TransientState tr;
  tr.delta = 0.7;
  double d = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net_pneumatic_force(cfg, tank, tr, d, -0.4, false));
    d = d < 0.12 ? d + 1e-5 : 0.05;
  }
}
BENCHMARK(BM_PneumaticForce);

static void BM_SimStep(benchmark::State& state) {
  RobotModel m;
  PneumaticConfig pneu;
  SimConfig cfg;
  RobotState st;
  st.q << 0.0, 0.12, -0.25, 1.0;
  st.mode = ContactMode::Stance;
  const Vec2 foot = foot_position(m, st.q);
  st.q(1) -= foot(1);
  World w = make_world(m, pneu, cfg, st, TankState{});
  ControlCommand cmd;
  for (auto _ : state) {
    World next = step(w, cmd, 1e-4);
    benchmark::DoNotOptimize(next);
  }
}
BENCHMARK(BM_SimStep);

static void BM_DefectEvaluation(benchmark::State& state) {
  TrajOptConfig c;
  c.motor.f_max_n = 148.0;
  c.motor.v_nom_mps = 1.18;
  const TrajOptProblem p = build_problem(c);
  const auto nlp = p.nlp(std::nullopt);
  const Eigen::VectorXd z = p.default_guess();
  Eigen::VectorXd ceq;
  Eigen::MatrixXd J;
  for (auto _ : state) {
    nlp.eq(z, ceq, &J);
    benchmark::DoNotOptimize(ceq);
  }
}
BENCHMARK(BM_DefectEvaluation);

BENCHMARK_MAIN();
