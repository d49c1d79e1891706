#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hopper/energy.hpp"
#include "hopper/scenario.hpp"
#include "hopper/trajopt.hpp"

using namespace hopper;

namespace {

// Reference pump-work integral of the theoretical laws (closed-form pieces):
// closed branch P0*V0*ln(d0/d1), open branch P(V_T+A*d_C)*ln(...) for the
// single-area pump.
double closed_form_pump_work(double p_tank, double v_tank, double a, double stroke,
                             double d_end) {
  const double p0 = kAtmospherePa;
  const double v0 = a * stroke;
  const double d_c = p0 * v0 / (p_tank * a);
  double w = 0.0;
  const double hi = stroke, lo = std::max(d_end, d_c);
  if (hi > lo) w += p0 * v0 * std::log(hi / lo);
  if (d_end < d_c) {
    const double top = v_tank + a * d_c;
    w += p_tank * top * std::log(top / (v_tank + a * d_end)) / 1.0;
  }
  return w;
}

}  // namespace

TEST_CASE("work quadrature against closed forms") {
  // zero compression -> zero work
  CHECK(pump_work({0.13, 0.13}, {10.0, 10.0}) == 0.0);

  // full stroke against the raw theoretical model at 2 atm matches the
  // analytic integral within 0.1%
  const PumpGeometry g = PumpGeometry::single_area(1.539e-4, 0.130);
  TankState tank;
  tank.pressure_pa = 2.0 * kAtmospherePa;
  const int n = 4000;
  std::vector<double> L, F;
  for (int i = 0; i <= n; ++i) {
    const double d = 0.130 - (0.130 - 1e-4) * i / n;
    L.push_back(d);
    const double d_c = critical_compression(g, tank);
    F.push_back(d > d_c ? theoretical_closed_force(g, tank, d)
                        : theoretical_open_force(g, tank, d));
  }
  const double w = pump_work(L, F);
  const double ref = closed_form_pump_work(tank.pressure_pa, tank.volume_m3,
                                           1.539e-4, 0.130, 1e-4);
  CHECK(w == doctest::Approx(ref).epsilon(1e-3));

  // quadrature refinement: halving the step changes the integral < 0.1%
  std::vector<double> L2, F2;
  for (int i = 0; i <= n / 2; ++i) {
    L2.push_back(L[2 * i]);
    F2.push_back(F[2 * i]);
  }
  CHECK(std::abs(pump_work(L2, F2) - w) / w < 1e-3);

  // actuator quasi-static work at frozen pressure matches
  // P * V_T * ln((V_T + A*s)/V_T) within 0.1%
  ActuatorModel act;
  act.bore_area_m2 = 8.296e-4;
  TankState t2;
  t2.pressure_pa = 303370.0;
  std::vector<double> Le, Fe;
  for (int i = 0; i <= n; ++i) {
    const double e = 0.1016 * i / n;
    Le.push_back(e);
    Fe.push_back(static_actuator_force(act, t2, e));
  }
  CHECK(actuator_work(Le, Fe) ==
        doctest::Approx(21.232455942984963).epsilon(1e-3));
}

TEST_CASE("tank energy forms") {
  CHECK(tank_energy_delta(2e5, 2e5, 1.939e-4) == 0.0);
  CHECK(tank_energy_delta(2e5, 2.1e5, 1.939e-4) == doctest::Approx(1.939));
  CHECK(tank_energy(303370.0, 1.939e-4) == doctest::Approx(39.1765255).epsilon(1e-12));
  CHECK(tank_energy(kAtmospherePa, 1.939e-4) == 0.0);
  // isothermal log-form metric is positive and below the linear form at
  // moderate over-pressure
  const double lin = tank_energy(303370.0, 1.939e-4);
  const double iso = tank_energy_isothermal(303370.0, 1.939e-4);
  CHECK(iso > 0.0);
  CHECK(iso < lin);
}

namespace {

// A charged hopping run on the point-mass model shared by the ledger tests.
struct RunArtifacts {
  PointMassConfig cfg;
  PointTrace trace;
  EnergyLedger ledger;
};

RunArtifacts charged_run(int cycles, bool release) {
  Scenario s;
  s.sim.dt_s = 1e-4;
  TrajOptConfig tc = s.trajopt_config(TrajObjective::Periodic, false, kAtmospherePa);
  const TrajSolution plan = solve(build_problem(tc));

  RunArtifacts out;
  out.cfg = s.point_mass_config();
  PlanReplayController::Options o;
  o.descent = descent_profile(plan);
  o.ascent = ascent_profile(plan);
  o.plan_tank_pa = plan.plan_tank_pa;
  if (release) {
    o.release_enabled = true;
    o.release_pressure_pa = 2.4 * kAtmospherePa;
  }
  PointWorld w = make_point_world(out.cfg, s.initial_tank(),
                                  out.cfg.leg_max_m + s.charge_hop_height_m);
  PlanReplayController ctl(out.cfg, o);
  out.trace = run_point_cycles(w, ctl, cycles);
  out.ledger = ledger_from_point_trace(out.trace, out.cfg, s.tank_volume_m3);
  return out;
}

}  // namespace

TEST_CASE("ledger on a charging run") {
  const RunArtifacts run = charged_run(30, false);
  REQUIRE(run.trace.cycles.size() >= 10);
  const EnergyLedger& led = run.ledger;

  // E_tank monotone non-decreasing, increments shrink toward a plateau
  double prev = -1.0;
  for (const auto& c : led.cycles) {
    CHECK(c.e_tank_j >= prev - 1e-12);
    prev = c.e_tank_j;
    CHECK(c.delta_e_tank_j >= -1e-12);
    CHECK(c.w_pa_j == 0.0);  // no release in this run
  }
  CHECK(led.cycles.back().delta_e_tank_j < 0.25 * led.cycles[2].delta_e_tank_j);

  // sum of per-cycle deltas equals the endpoint difference exactly
  double sum = 0.0;
  for (const auto& c : led.cycles) sum += c.delta_e_tank_j;
  const double endpoint = led.cycles.back().e_tank_j -
                          (led.cycles.front().e_tank_j - led.cycles.front().delta_e_tank_j);
  CHECK(sum == doctest::Approx(endpoint).epsilon(1e-12));

  // W_pump grows with tank pressure across cycles (compare early vs late)
  CHECK(led.cycles[led.cycles.size() - 2].w_pump_j > led.cycles[1].w_pump_j);

  // per-cycle audit closes within 1% of throughput at dt = 1e-4
  for (const auto& c : led.cycles) {
    CHECK(c.complete);
    CHECK(c.audit_residual_j < 0.01 * c.throughput_j);
  }
}

TEST_CASE("ledger on a release run") {
  const RunArtifacts run = charged_run(40, true);
  const EnergyLedger& led = run.ledger;
  int released = -1;
  for (size_t i = 0; i < led.cycles.size(); ++i)
    if (led.cycles[i].released) released = static_cast<int>(i);
  REQUIRE(released > 0);

  const EnergyCycle& rc = led.cycles[released];
  CHECK(rc.w_pa_j > 0.0);
  // the tank loses at least the actuator work on the release cycle
  const double tank_drop = -rc.delta_e_tank_j;
  CHECK(tank_drop >= rc.w_pa_j - 1e-9);
  // enhanced liftoff KE well above the regular cycles
  double regular_ke = 0.0;
  for (int i = 0; i < released; ++i)
    regular_ke = std::max(regular_ke, led.cycles[i].ke_liftoff_j);
  CHECK(rc.ke_liftoff_j > 3.0 * regular_ke);
  // E_tank decreases only on the release cycle
  for (size_t i = 1; i < led.cycles.size(); ++i)
    if (static_cast<int>(i) != released)
      CHECK(led.cycles[i].e_tank_j >= led.cycles[i - 1].e_tank_j - 1e-12);
  // audit still closes on the release cycle
  CHECK(rc.audit_residual_j < 0.01 * rc.throughput_j);
}
