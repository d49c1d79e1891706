#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hopper/pneumatics.hpp"

using namespace hopper;

namespace {

// Single-area pump matching the hand-checked numbers: A = 1.539e-4 m^2,
// stroke 130 mm, V0 = A * stroke.
PumpGeometry spec_pump() { return PumpGeometry::single_area(1.539e-4, 0.130); }

TankState tank_at(double p_abs, double v = 1.939e-4) {
  TankState t;
  t.pressure_pa = p_abs;
  t.volume_m3 = v;
  return t;
}

}  // namespace

TEST_CASE("theoretical closed force") {
  const auto geom = spec_pump();
  const auto tank = tank_at(kAtmospherePa);

  // fully extended: ratio collapses to atmospheric pressure times area
  CHECK(theoretical_closed_force(geom, tank, 0.130) ==
        doctest::Approx(101325.0 * 1.539e-4).epsilon(1e-12));
  // frozen direct evaluation at half stroke
  CHECK(theoretical_closed_force(geom, tank, 0.065) ==
        doctest::Approx(31.187835).epsilon(1e-12));
  // at d_C the closed force equals A * P_tank
  const auto tank2 = tank_at(2 * kAtmospherePa);
  const double d_c = critical_compression(geom, tank2);
  CHECK(theoretical_closed_force(geom, tank2, d_c) ==
        doctest::Approx(1.539e-4 * 2 * kAtmospherePa).epsilon(1e-12));

  CHECK_THROWS_AS(theoretical_closed_force(geom, tank, 0.0), std::domain_error);
  CHECK_THROWS_AS(theoretical_closed_force(geom, tank, -0.01), std::domain_error);
  CHECK_THROWS_AS(theoretical_closed_force(geom, tank, 0.131), std::domain_error);

  // monotone decreasing in remaining length
  double prev = 1e300;
  for (double d = 0.01; d <= 0.13; d += 0.001) {
    const double f = theoretical_closed_force(geom, tank, d);
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("critical compression") {
  const auto geom = spec_pump();
  CHECK(critical_compression(geom, tank_at(kAtmospherePa)) ==
        doctest::Approx(0.130).epsilon(1e-12));
  CHECK(critical_compression(geom, tank_at(2 * kAtmospherePa)) ==
        doctest::Approx(0.065).epsilon(1e-12));
  // 225 kPa gauge endpoint of the tested range
  CHECK(critical_compression(geom, tank_at(225000.0 + kAtmospherePa)) ==
        doctest::Approx(0.040365433233739374).epsilon(1e-12));
  CHECK(critical_compression(geom, tank_at(225000.0 + kAtmospherePa)) < 0.130);

  TankState below;
  below.pressure_pa = 0.5 * kAtmospherePa;
  CHECK_THROWS_AS(critical_compression(geom, below), std::domain_error);
}

TEST_CASE("theoretical open force") {
  const auto geom = spec_pump();
  const auto tank = tank_at(2 * kAtmospherePa);
  const double d_c = critical_compression(geom, tank);

  // continuity with the closed branch at d_C
  CHECK(theoretical_open_force(geom, tank, d_c) ==
        doctest::Approx(theoretical_closed_force(geom, tank, d_c)).epsilon(1e-12));
  // frozen direct evaluation of the open branch at full compression
  CHECK(theoretical_open_force(geom, tank, 0.0) ==
        doctest::Approx(32.796847415794225).epsilon(1e-12));
  // infinite-reservoir limit: F -> A * P_tank for all d
  const auto huge = tank_at(2 * kAtmospherePa, 10.0);
  for (double d = 0.0; d <= d_c; d += 0.01)
    CHECK(theoretical_open_force(geom, huge, d) ==
          doctest::Approx(1.539e-4 * 2 * kAtmospherePa).epsilon(1e-4));

  CHECK_THROWS_AS(theoretical_open_force(geom, tank, d_c + 0.01), std::domain_error);
}

TEST_CASE("two-stage composite recovers the single-area law and stays continuous") {
  PumpGeometry two;  // defaults: 14/17 mm stages
  two.validate();
  const auto tank = tank_at(2.5 * kAtmospherePa);
  const double d_c = critical_compression(two, tank);
  CHECK(theoretical_open_force(two, tank, d_c) ==
        doctest::Approx(theoretical_closed_force(two, tank, d_c)).epsilon(1e-12));

  // composite force is continuous across the stage transition
  const double x_mid = 0.5 * (two.stage1_end_m + two.stage2_start_m);
  const double eps = 1e-9;
  const double f_a = theoretical_pump_force(two, tank, x_mid - eps);
  const double f_b = theoretical_pump_force(two, tank, x_mid + eps);
  CHECK(f_a == doctest::Approx(f_b).epsilon(1e-5));

  // compression force non-decreasing as remaining length shrinks
  double prev = 0.0;
  for (double x = 0.0; x < 0.1016; x += 1e-3) {
    const double f = theoretical_pump_force(two, tank, x);
    CHECK(f >= prev - 1e-9);
    prev = f;
  }
}

TEST_CASE("pump stroke tank update") {
  const auto geom = spec_pump();
  const auto tank = tank_at(2 * kAtmospherePa);

  // shallow stroke: valve never opened
  const TankState same = pump_stroke_tank_update(geom, tank, 0.130 - 0.066);
  CHECK(same.pressure_pa == tank.pressure_pa);

  // full stroke: frozen update value
  const TankState up = pump_stroke_tank_update(geom, tank, 0.130);
  CHECK(up.pressure_pa == doctest::Approx(213104.9214801444).epsilon(1e-12));

  // repeated full strokes: monotone pressure, shrinking increments
  TankState t = tank_at(kAtmospherePa);
  double prev_inc = 1e300;
  for (int i = 0; i < 50; ++i) {
    const TankState next = pump_stroke_tank_update(geom, t, 0.129);
    const double inc = next.pressure_pa - t.pressure_pa;
    CHECK(inc >= 0.0);
    CHECK(inc <= prev_inc + 1e-9);
    prev_inc = inc;
    t = next;
  }
}

TEST_CASE("static actuator force") {
  ActuatorModel act;
  act.bore_area_m2 = 8.296e-4;  // rounded bore used by the hand-checked values
  const auto tank = tank_at(303370.0);

  CHECK(static_actuator_force(act, tank, 0.0) ==
        doctest::Approx(251.675752).epsilon(1e-12));
  CHECK(static_actuator_force(act, tank, 0.1016) ==
        doctest::Approx(175.4210842390538).epsilon(1e-12));
  // unpressurized limit
  CHECK(static_actuator_force(act, tank_at(kAtmospherePa), 0.0) ==
        doctest::Approx(kAtmospherePa * 8.296e-4).epsilon(1e-12));

  // conserved product: F(d) * (V_tank + A*d) constant in d
  const double c0 = static_actuator_force(act, tank, 0.0) * tank.volume_m3;
  for (double e = 0.0; e <= 0.1016; e += 0.00254) {
    const double c = static_actuator_force(act, tank, e) *
                     (tank.volume_m3 + act.bore_area_m2 * e);
    CHECK(c == doctest::Approx(c0).epsilon(1e-12));
  }

  CHECK_THROWS_AS(static_actuator_force(act, tank, -0.001), std::domain_error);
  CHECK_THROWS_AS(static_actuator_force(act, tank, 0.2), std::domain_error);
}

TEST_CASE("transient ODE integration matches the closed-form response") {
  ActuatorModel act;
  act.k1 = 1.0;
  act.k2 = 3.0;
  act.k3 = 1.0;

  // valve closed, zero state stays zero
  TransientState st;
  st.valve_open = false;
  for (int i = 0; i < 100; ++i) st = step_transient(st, act, 1e-3);
  CHECK(st.delta == 0.0);
  CHECK(st.delta_dot == 0.0);

  // overdamped unit step: RK4 vs two-exponential solution to 1e-8
  st = TransientState{};
  st.valve_open = true;
  const double dt = 1e-4;
  double t = 0.0;
  // frozen closed-form values (roots (-3 +- sqrt 5)/2)
  const struct { double t, delta; } ref[] = {
      {0.5, 0.0788667781651633},
      {1.0, 0.2133544006966317},
      {3.0, 0.6278176944393654},
      {10.0, 0.9743177559441867},
  };
  size_t k = 0;
  while (t < 10.0 + 0.5 * dt && k < 4) {
    if (std::abs(t - ref[k].t) < 0.5 * dt) {
      CHECK(st.delta == doctest::Approx(ref[k].delta).epsilon(1e-8));
      CHECK(st.delta ==
            doctest::Approx(transient_step_response(act, t)).epsilon(1e-8));
      ++k;
    }
    st = step_transient(st, act, dt);
    t += dt;
  }
  CHECK(k == 4);

  // steady state is 1 under the k3 = 1 normalization
  for (int i = 0; i < 200000; ++i) st = step_transient(st, act, 1e-3);
  CHECK(st.delta == doctest::Approx(1.0).epsilon(1e-9));

  // boundedness for an underdamped stable system
  ActuatorModel ud;
  ud.k1 = 1e-4;
  ud.k2 = 5e-3;
  TransientState u;
  u.valve_open = true;
  double peak = 0.0;
  for (int i = 0; i < 200000; ++i) {
    u = step_transient(u, ud, 1e-5);
    peak = std::max(peak, u.delta);
    CHECK(u.delta >= -1e-9);
  }
  CHECK(peak < 2.0);
  CHECK(u.delta == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS([&] { ActuatorModel bad; bad.k2 = -1.0; bad.validate(); }(),
                  std::invalid_argument);
}

TEST_CASE("transient closed form rate and rise time") {
  ActuatorModel act;  // default underdamped-ish estimates
  const double t_r = transient_rise_time(act, 0.9);
  CHECK(transient_step_response(act, t_r) == doctest::Approx(0.9).epsilon(1e-6));
  // rate matches a central difference of the closed form
  for (double t : {0.2 * t_r, 0.7 * t_r, 1.5 * t_r}) {
    const double h = 1e-7;
    const double fd = (transient_step_response(act, t + h) -
                       transient_step_response(act, t - h)) / (2 * h);
    CHECK(transient_step_response_rate(act, t) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("fitted pump force branching") {
  PumpGeometry geom = spec_pump();
  geom.stage1_end_m = 0.050;
  geom.stage2_start_m = 0.065;

  PumpFitCoefficients fit;
  fit.m1 = 150.0; fit.b1 = 2.0;
  fit.m2 = 600.0; fit.b2 = -20.5;       // continuous at l1: 9.5 N
  fit.c1 = 8000.0; fit.c2 = 100.0; fit.c3 = -21.8;  // continuous at l2: 18.5 N
  fit.c4 = -30.0; fit.c5 = 3.0; fit.c6 = 0.952;     // = 1 at x_C(2.6 P0) = 0.08

  const auto tank = tank_at(2.6 * kAtmospherePa);

  // extension returns exactly zero
  CHECK(fitted_pump_force(fit, geom, tank, 0.03, +0.1) == 0.0);
  CHECK(fitted_pump_force(fit, geom, tank, 0.03, 0.0) == 0.0);

  // branch continuity at l1 and l2
  const double f_l1m = fitted_pump_force(fit, geom, tank, 0.050 - 1e-9, -1.0);
  const double f_l1p = fitted_pump_force(fit, geom, tank, 0.050 + 1e-9, -1.0);
  CHECK(f_l1m == doctest::Approx(f_l1p).epsilon(1e-6));
  const double f_l2m = fitted_pump_force(fit, geom, tank, 0.065 - 1e-9, -1.0);
  const double f_l2p = fitted_pump_force(fit, geom, tank, 0.065 + 1e-9, -1.0);
  CHECK(f_l2m == doctest::Approx(f_l2p).epsilon(1e-6));

  // valve-opening continuity at x_C = 0.08 (multiplier pinned at 1 there)
  const double f_cm = fitted_pump_force(fit, geom, tank, 0.080 - 1e-9, -1.0);
  const double f_cp = fitted_pump_force(fit, geom, tank, 0.080 + 1e-9, -1.0);
  CHECK(f_cm == doctest::Approx(f_cp).epsilon(1e-6));

  // stage-1 values are the plain line
  CHECK(fitted_pump_force(fit, geom, tank, 0.02, -0.5) ==
        doctest::Approx(150.0 * 0.02 + 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(fitted_pump_force(fit, geom, tank, -0.01, -1.0),
                  std::domain_error);
  CHECK_THROWS_AS(fitted_pump_force(fit, geom, tank, 0.14, -1.0), std::domain_error);
}

TEST_CASE("lumped pneumatic force branches") {
  PneumaticConfig cfg;
  cfg.pump = spec_pump();
  cfg.actuator.bore_area_m2 = 8.296e-4;
  cfg.validate();
  const auto tank = tank_at(303370.0);
  TransientState tr;
  tr.delta = 1.0;
  tr.valve_open = true;

  // extension, valve closed -> 0
  CHECK(lumped_pneumatic_force(cfg, tank, tr, 0.05, +0.2, false) == 0.0);
  // extension, valve open, delta = 1, fully retracted -> the static value
  CHECK(lumped_pneumatic_force(cfg, tank, tr, 0.0, +0.2, true) ==
        doctest::Approx(251.675752).epsilon(1e-12));
  // compression at full extension -> theoretical branch (fitted not configured)
  const double f = lumped_pneumatic_force(cfg, tank, tr, 0.130, -0.2, false);
  CHECK(f == doctest::Approx(kAtmospherePa * 1.539e-4).epsilon(1e-12));
  // ddot = 0 treated as extension
  CHECK(lumped_pneumatic_force(cfg, tank, tr, 0.05, 0.0, false) == 0.0);

  // valve minimum actuation pressure forces s_v to 0
  PneumaticConfig gated = cfg;
  gated.valve_min_gauge_pa = 300000.0;
  CHECK(lumped_pneumatic_force(gated, tank, tr, 0.0, +0.2, true) == 0.0);

  // net force: zero at rest fully extended, gauge-corrected when pushing
  CHECK(net_pneumatic_force(cfg, tank, tr, 0.130, -0.2, false) ==
        doctest::Approx(0.0).epsilon(1e-12));
  const double net_push = net_pneumatic_force(cfg, tank, tr, 0.0, +0.2, true);
  CHECK(net_push ==
        doctest::Approx(251.675752 - kAtmospherePa * 8.296e-4).epsilon(1e-12));
}

TEST_CASE("tank release update") {
  ActuatorModel act;
  const auto tank = tank_at(303370.0);
  const TankState after = tank_release_update(act, tank, act.stroke_m);
  CHECK(after.pressure_pa ==
        doctest::Approx(303370.0 * 1.939e-4 /
                        (1.939e-4 + act.bore_area_m2 * act.stroke_m))
            .epsilon(1e-12));
  CHECK(after.pressure_pa < tank.pressure_pa);
  CHECK(after.pressure_pa >= kAtmospherePa);
  // zero extension at close: nothing left the tank
  CHECK(tank_release_update(act, tank, 0.0).pressure_pa == tank.pressure_pa);
}
