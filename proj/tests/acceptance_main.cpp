// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
// Criteria run with the default (theoretical, datasheet-derived) parameters.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "hopper/energy.hpp"
#include "hopper/rng.hpp"
#include "hopper/scenario.hpp"
#include "hopper/sysid.hpp"
#include "hopper/tasks.hpp"
#include "hopper/trajopt.hpp"

using namespace hopper;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
  std::string name;
  std::vector<std::string> notes;
  bool ok = true;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Criterion(std::string n) : name(std::move(n)) {}

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back(what);
    }
  }
  template <typename T>
  void note(const std::string& key, T value) {
    std::ostringstream os;
    os << key << "=" << value;
    notes.push_back(os.str());
  }
  void finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << secs << " s)";
    for (const auto& n : notes) std::cout << "\n         " << n;
    std::cout << "\n";
    if (!ok) ++g_failures;
  }
};

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-300, std::abs(b));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// least-squares line fit returning R^2
double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double cov = n * sxy - sx * sy;
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  if (vx <= 0 || vy <= 0) return 0.0;
  return (cov * cov) / (vx * vy);
}

// ---------------------------------------------------------------------------

void criterion1_pneumatic_model() {
  Criterion c("1 pneumatic continuity/limits");

  // closed/open continuity at d_C, across a pressure sweep, both geometries
  for (const PumpGeometry& g :
       {PumpGeometry::single_area(1.539e-4, 0.130), PumpGeometry{}}) {
    for (double r : {1.3, 2.0, 2.99, 3.7}) {
      TankState tank;
      tank.pressure_pa = r * kAtmospherePa;
      const double d_c = critical_compression(g, tank);
      const double fc = theoretical_closed_force(g, tank, d_c);
      const double fo = theoretical_open_force(g, tank, d_c);
      c.require(rel_err(fc, fo) < 1e-12, "closed/open continuity at d_C");
    }
  }

  // conserved product of the quasi-static actuator law to 1e-12
  ActuatorModel act;
  TankState tank;
  tank.pressure_pa = 303370.0;
  const double base = static_actuator_force(act, tank, 0.0) * tank.volume_m3;
  for (int i = 0; i <= 100; ++i) {
    const double e = act.stroke_m * i / 100.0;
    const double prod = static_actuator_force(act, tank, e) *
                        (tank.volume_m3 + act.bore_area_m2 * e);
    c.require(rel_err(prod, base) < 1e-12, "conserved product F*(V_T+A*d)");
  }

  // transient steady state delta = 1 to 1e-6
  TransientState st;
  st.valve_open = true;
  ActuatorModel tr;
  tr.k1 = 2.5e-4;
  tr.k2 = 2.0e-2;
  for (int i = 0; i < 400000; ++i) st = step_transient(st, tr, 1e-5);
  c.require(std::abs(st.delta - 1.0) < 1e-6, "transient steady state");
  c.finish();
}

void criterion2_sysid_roundtrip() {
  Criterion c("2 system-ID round trips");

  PumpGeometry geom = PumpGeometry::single_area(1.539e-4, 0.130);
  geom.stage1_end_m = 0.050;
  geom.stage2_start_m = 0.065;
  PumpFitCoefficients truth;
  truth.m1 = 150.0; truth.b1 = 2.0;
  truth.m2 = 600.0; truth.b2 = -20.5;
  truth.c1 = 8000.0; truth.c2 = 100.0; truth.c3 = -21.8;
  truth.c4 = -30.0; truth.c5 = 3.0; truth.c6 = 0.952;

  SyntheticSpec spec;
  spec.kind = SyntheticKind::Pump;
  spec.geom = geom;
  spec.fit = truth;
  spec.tank_pressures_pa = {2.6 * kAtmospherePa};
  spec.samples_per_curve = 260;

  auto coeff_err = [&](const PumpFitCoefficients& a) {
    double m = 0;
    m = std::max(m, rel_err(a.m1, truth.m1));
    m = std::max(m, rel_err(a.b1, truth.b1));
    m = std::max(m, rel_err(a.m2, truth.m2));
    m = std::max(m, rel_err(a.b2, truth.b2));
    m = std::max(m, rel_err(a.c1, truth.c1));
    m = std::max(m, rel_err(a.c2, truth.c2));
    m = std::max(m, rel_err(a.c3, truth.c3));
    m = std::max(m, rel_err(a.c4, truth.c4));
    m = std::max(m, rel_err(a.c5, truth.c5));
    m = std::max(m, rel_err(a.c6, truth.c6));
    return m;
  };

  spec.noise_rel = 0.0;
  spec.seed = 4;
  const auto clean = fit_pump_model(generate_synthetic(spec).force_displacement, geom);
  c.require(coeff_err(clean.coefficients) < 1e-9, "noiseless pump recovery 1e-9");
  c.note("pump_err_clean", coeff_err(clean.coefficients));

  spec.noise_rel = 0.01;
  spec.seed = 8;
  const auto noisy = fit_pump_model(generate_synthetic(spec).force_displacement, geom);
  c.require(coeff_err(noisy.coefficients) < 0.02, "1% noise pump error <= 2%");
  c.note("pump_err_noisy", coeff_err(noisy.coefficients));

  SyntheticSpec ts;
  ts.kind = SyntheticKind::Transient;
  ts.actuator.k1 = 2.5e-4;
  ts.actuator.k2 = 2.0e-2;
  ts.samples_per_curve = 240;
  ts.noise_rel = 0.0;
  ts.seed = 5;
  const auto tclean = fit_transient(generate_synthetic(ts).step_response);
  c.require(rel_err(tclean.k1, 2.5e-4) < 1e-9 && rel_err(tclean.k2, 2.0e-2) < 1e-9,
            "noiseless transient recovery 1e-9");
  c.note("k1_err_clean", rel_err(tclean.k1, 2.5e-4));

  ts.noise_rel = 0.01;
  ts.seed = 6;
  const auto tnoisy = fit_transient(generate_synthetic(ts).step_response);
  c.require(rel_err(tnoisy.k1, 2.5e-4) < 0.02 && rel_err(tnoisy.k2, 2.0e-2) < 0.02,
            "1% noise transient error <= 2%");
  c.finish();
}

void criterion3_dynamics() {
  Criterion c("3 dynamics correctness");
  RobotModel m;
  Rng rng(2024);
  auto rand_q = [&] {
    Vec4 q;
    q << 2 * rng.uniform01() - 1, 0.2 + 0.5 * rng.uniform01(),
        1.2 * rng.uniform01() - 0.6, 0.4 + 1.6 * rng.uniform01();
    return q;
  };
  auto rand_qd = [&] {
    Vec4 qd;
    for (int i = 0; i < 4; ++i) qd(i) = 4 * rng.uniform01() - 2;
    return qd;
  };

  // analytic kinematic jacobians vs central differences, 100 random states
  const double h = 1e-7;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec4 q = rand_q();
    const auto kin = leg_kinematics(m, q);
    const auto J = foot_jacobian(m, q);
    for (int j = 0; j < 4; ++j) {
      Vec4 qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      const auto kp = leg_kinematics(m, qp);
      const auto km = leg_kinematics(m, qm);
      auto ok = [&](double an, double fd) {
        const double scale = std::max({1.0, std::abs(an), std::abs(fd)});
        worst = std::max(worst, std::abs(an - fd) / scale);
        return std::abs(an - fd) / scale < 1e-6;
      };
      c.require(ok(kin.dL_dq(j), (kp.leg_length - km.leg_length) / (2 * h)),
                "dL/dq fd");
      c.require(ok(kin.dqleg_dq(j), (kp.leg_angle - km.leg_angle) / (2 * h)),
                "dqleg/dq fd");
      c.require(
          ok(kin.dd_dq(j), (kp.attachment_length - km.attachment_length) / (2 * h)),
          "dd/dq fd");
      const Vec2 fd = (foot_position(m, qp) - foot_position(m, qm)) / (2 * h);
      c.require(ok(J(0, j), fd(0)) && ok(J(1, j), fd(1)), "foot jacobian fd");
    }
  }
  c.note("worst_jacobian_rel_err", worst);

  // impact map over 1000 random impacts
  for (int trial = 0; trial < 1000; ++trial) {
    RobotState st;
    st.q = rand_q();
    st.qdot = rand_qd();
    const double ke_pre = kinetic_energy(m, st);
    const auto imp = impact_map(m, st);
    RobotState post = st;
    post.qdot = imp.qdot_post;
    post.mode = ContactMode::Stance;
    const auto t = dynamics_terms(m, post);
    c.require((t.J_h * imp.qdot_post).lpNorm<Eigen::Infinity>() < 1e-9,
              "impact J*qdot+ = 0");
    c.require(kinetic_energy(m, post) <= ke_pre * (1 + 1e-12) + 1e-12,
              "impact KE non-increase");
  }

  // aerial drift < 1e-6 J over 0.1 s at dt 1e-5
  RobotState st;
  st.q << 0.0, 0.6, 0.15, 0.9;
  st.qdot << 0.3, 0.8, -1.0, 2.0;
  st.mode = ContactMode::Aerial;
  const double e0 = kinetic_energy(m, st) + potential_energy(m, st);
  const double dt = 1e-5;
  for (int i = 0; i < 10000; ++i) {
    auto f = [&](const RobotState& s) { return aerial_accel(m, s, Vec2::Zero(), 0.0); };
    const Vec4 k1q = st.qdot, k1v = f(st);
    RobotState s2 = st;
    s2.q += 0.5 * dt * k1q;
    s2.qdot += 0.5 * dt * k1v;
    const Vec4 k2q = s2.qdot, k2v = f(s2);
    RobotState s3 = st;
    s3.q += 0.5 * dt * k2q;
    s3.qdot += 0.5 * dt * k2v;
    const Vec4 k3q = s3.qdot, k3v = f(s3);
    RobotState s4 = st;
    s4.q += dt * k3q;
    s4.qdot += dt * k3v;
    const Vec4 k4q = s4.qdot, k4v = f(s4);
    st.q += dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    st.qdot += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  const double drift =
      std::abs(kinetic_energy(m, st) + potential_energy(m, st) - e0);
  c.require(drift < 1e-6, "aerial energy drift < 1e-6 J");
  c.note("aerial_drift_j", drift);
  c.finish();
}

void criterion4_collocation() {
  Criterion c("4 collocation validity");
  Scenario s;
  TrajOptConfig tc = s.trajopt_config(TrajObjective::Periodic, false, kAtmospherePa);
  tc.apex_z_m = tc.leg_max_m + 0.043;
  tc.n_desc = 30;
  tc.n_asc = 30;

  const auto t0 = std::chrono::steady_clock::now();
  const TrajSolution sol = solve(build_problem(tc));
  const double solve_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(solve_s < 60.0, "solve under 60 s");
  c.note("periodic_solve_s", solve_s);
  c.require(sol.max_defect < 1e-6, "defect residuals < 1e-6");
  c.note("max_defect", sol.max_defect);

  // refinement: N -> 2N moves the apex < 0.5 mm
  TrajOptConfig t2 = tc;
  t2.n_desc *= 2;
  t2.n_asc *= 2;
  const TrajSolution sol2 = solve(build_problem(t2));
  c.require(std::abs(sol2.predicted_apex_height_m - sol.predicted_apex_height_m) <
                5e-4,
            "refinement apex change < 0.5 mm");
  c.note("refine_delta_m",
         std::abs(sol2.predicted_apex_height_m - sol.predicted_apex_height_m));

  // explosive apex >= coarse exhaustive oracle - 1e-3
  TrajOptConfig ec = s.trajopt_config(TrajObjective::Explosive, false, kAtmospherePa);
  ec.apex_z_m = ec.leg_max_m + 0.043;
  ec.n_desc = 40;
  ec.n_asc = 40;
  const TrajSolution esol = solve(build_problem(ec));
  double best = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const double f[3] = {ec.motor.f_max_n * i / 9.0, ec.motor.f_max_n * j / 9.0,
                             ec.motor.f_max_n * k / 9.0};
        double L = ec.leg_min_m, V = 0.0;
        bool ok = true;
        for (int step = 0; step < 200000 && L < ec.leg_max_m; ++step) {
          const double span = ec.leg_max_m - ec.leg_min_m;
          const double s_frac = (L - ec.leg_min_m) / span;
          const int seg = std::min(2, static_cast<int>(3.0 * s_frac));
          double force = f[seg];
          if (seg == 2) force *= std::clamp(3.0 * (1.0 - s_frac), 0.0, 1.0);
          force = std::min(force, ec.motor.upper(V));
          V += (force / ec.m_tilde_kg - ec.gravity) * 1e-5;
          L += V * 1e-5;
          if (V < 0.0) { ok = false; break; }
        }
        if (ok) best = std::max(best, L + V * V / (2 * ec.gravity) - ec.leg_max_m);
      }
  c.require(esol.predicted_apex_height_m >= best - 1e-3,
            "NLP apex >= grid oracle - 1 mm");
  c.note("nlp_apex_m", esol.predicted_apex_height_m);
  c.note("grid_apex_m", best);

  // 3-cycle replay drift < 2 mm/cycle
  PointMassConfig pm = s.point_mass_config();
  pm.dt_s = 5e-5;
  PlanReplayController::Options o;
  o.descent = descent_profile(sol);
  o.ascent = ascent_profile(sol);
  o.plan_tank_pa = sol.plan_tank_pa;
  PointWorld w = make_point_world(pm, s.initial_tank(), tc.apex_z_m);
  PlanReplayController ctl(pm, o);
  const PointTrace tr = run_point_cycles(w, ctl, 3);
  c.require(tr.cycles.size() == 3, "replay completed 3 cycles");
  double prev = tc.apex_z_m - tc.leg_max_m;
  double worst_drift = 0.0;
  for (const auto& cyc : tr.cycles) {
    worst_drift = std::max(worst_drift, std::abs(cyc.apex_height_m - prev));
    prev = cyc.apex_height_m;
  }
  c.require(worst_drift < 2e-3, "replay apex drift < 2 mm/cycle");
  c.note("worst_drift_m", worst_drift);
  c.finish();
}

void criterion5_paper_reproduction() {
  Criterion c("5 qualitative paper reproduction");
  const std::string dir =
      (fs::temp_directory_path() / "hopper_acceptance" / "criterion5").string();
  fs::remove_all(dir);

  Scenario s;  // defaults: theoretical pump, datasheet geometry, m = 2.2 kg
  s.task = TaskKind::PeriodicCharge;
  s.cycles = 60;
  const auto charge = run_simulate(s, dir + "/charge", 2, false);

  // (a) monotone tank pressure with a plateau
  const auto pressures = charge.at("cycle_tank_pa").get<std::vector<double>>();
  c.require(pressures.size() >= 30, "charging run has cycles");
  bool monotone = true;
  for (size_t i = 1; i < pressures.size(); ++i)
    if (pressures[i] < pressures[i - 1] - 1e-9) monotone = false;
  c.require(monotone, "(a) tank pressure monotone");
  const double early_inc = pressures[3] - pressures[2];
  const double late_inc = pressures.back() - pressures[pressures.size() - 2];
  c.require(late_inc < 0.2 * early_inc + 1e-9, "(a) increments shrink (plateau)");
  c.note("plateau_gauge_kpa", (pressures.back() - kAtmospherePa) / 1e3);

  // (b,c) enhanced hop at 303.37 kPa absolute release
  Scenario e = s;
  e.task = TaskKind::EnhancedHop;
  e.cycles = 80;
  e.release_gauge_pa = 303370.0 - kAtmospherePa;
  const auto enh = run_simulate(e, dir + "/enhanced", 2, false);
  c.require(enh.at("released").get<bool>(), "(b) release reached 303.37 kPa");
  const double apex = enh.at("enhanced_apex_m").get<double>();
  const double baseline = enh.at("motor_only_apex_m").get<double>();
  const double amp = enh.at("amplification_factor").get<double>();
  c.require(amp >= 3.0, "(b) amplification >= 3");
  c.require(apex >= 0.15 && apex <= 0.30, "(c) enhanced apex in [0.15, 0.30] m");
  c.note("enhanced_apex_m", apex);
  c.note("motor_only_apex_m", baseline);
  c.note("amplification", amp);

  // (d) apex vs release pressure: monotone, linear fit R^2 > 0.95
  Scenario ps = s;
  ps.task = TaskKind::EnhancedHop;
  ps.sweep_tank_gauge_pa = {120e3, 150e3, 180e3, 210e3, 240e3};
  const auto sweep = run_simulate(ps, dir + "/pressure_sweep", 4, false);
  const CsvTable pt = read_csv(dir + "/pressure_sweep/sweep_pressure.csv");
  std::vector<double> px, py;
  const int ci = pt.column("tank_gauge_pa"), ca = pt.column("apex_m");
  for (const auto& row : pt.rows) {
    px.push_back(row[ci]);
    py.push_back(row[ca]);
  }
  bool increasing = true;
  for (size_t i = 1; i < py.size(); ++i)
    if (py[i] <= py[i - 1]) increasing = false;
  c.require(increasing, "(d) apex monotone in release pressure");
  const double r2 = linear_r2(px, py);
  c.require(r2 > 0.95, "(d) linear fit R^2 > 0.95");
  c.note("pressure_sweep_r2", r2);

  // (e) apex vs mass: interior maximum within 1.9 +- 0.5 kg
  Scenario ms = s;
  ms.task = TaskKind::EnhancedHop;
  ms.cycles = 60;
  ms.sweep_mass_kg = {1.5, 1.8, 2.1, 2.4, 2.7, 3.0};
  const auto msweep = run_simulate(ms, dir + "/mass_sweep", 4, false);
  const CsvTable mt = read_csv(dir + "/mass_sweep/sweep_mass.csv");
  std::vector<double> mx, my;
  const int cm = mt.column("mass_kg"), cap = mt.column("apex_m");
  for (const auto& row : mt.rows) {
    mx.push_back(row[cm]);
    my.push_back(row[cap]);
  }
  size_t imax = 0;
  for (size_t i = 1; i < my.size(); ++i)
    if (my[i] > my[imax]) imax = i;
  c.require(imax > 0 && imax + 1 < my.size(), "(e) interior maximum");
  c.require(std::abs(mx[imax] - 1.9) <= 0.5, "(e) peak within 1.9 +- 0.5 kg");
  {
    std::ostringstream os;
    for (size_t i = 0; i < mx.size(); ++i)
      os << mx[i] << ":" << my[i] << (i + 1 < mx.size() ? " " : "");
    c.note("mass_sweep", os.str());
  }
  (void)sweep;
  (void)msweep;
  c.finish();
}

void criterion6_energy_audit() {
  Criterion c("6 energy audit");
  Scenario s;
  s.sim.dt_s = 1e-4;
  TrajOptConfig tc = s.trajopt_config(TrajObjective::Periodic, false, kAtmospherePa);
  const TrajSolution plan = solve(build_problem(tc));

  PointMassConfig pm = s.point_mass_config();
  PlanReplayController::Options o;
  o.descent = descent_profile(plan);
  o.ascent = ascent_profile(plan);
  o.plan_tank_pa = plan.plan_tank_pa;
  o.release_enabled = true;
  o.release_pressure_pa = 303370.0;
  PointWorld w = make_point_world(pm, s.initial_tank(),
                                  pm.leg_max_m + s.charge_hop_height_m);
  PlanReplayController ctl(pm, o);
  const PointTrace tr = run_point_cycles(w, ctl, 80);
  const EnergyLedger led = ledger_from_point_trace(tr, pm, s.tank_volume_m3);
  c.require(!led.cycles.empty(), "ledger produced");

  double worst_ratio = 0.0;
  for (const auto& cyc : led.cycles) {
    if (!cyc.complete) continue;
    worst_ratio = std::max(worst_ratio, cyc.audit_residual_j / cyc.throughput_j);
  }
  c.require(worst_ratio < 0.01, "per-cycle balance within 1% of throughput");
  c.note("worst_audit_ratio", worst_ratio);

  // sum of deltas equals the endpoint-to-endpoint difference exactly
  double sum = 0.0;
  for (const auto& cyc : led.cycles) sum += cyc.delta_e_tank_j;
  const double start_e =
      led.cycles.front().e_tank_j - led.cycles.front().delta_e_tank_j;
  const double endpoint = led.cycles.back().e_tank_j - start_e;
  c.require(std::abs(sum - endpoint) < 1e-9, "sum(dE_tank) == endpoint difference");

  // enhanced liftoff KE >= 3x regular
  double regular = 0.0, enhanced = 0.0;
  for (const auto& cyc : led.cycles) {
    if (cyc.released) enhanced = std::max(enhanced, cyc.ke_liftoff_j);
    else regular = std::max(regular, cyc.ke_liftoff_j);
  }
  c.require(enhanced >= 3.0 * regular, "enhanced KE >= 3x regular KE");
  c.note("ke_regular_j", regular);
  c.note("ke_enhanced_j", enhanced);
  c.finish();
}

void criterion7_determinism() {
  Criterion c("7 determinism");
  const std::string dir =
      (fs::temp_directory_path() / "hopper_acceptance" / "criterion7").string();
  fs::remove_all(dir);
  fs::create_directories(dir);

  // through the CLI binary, twice, byte-compare every output
  std::ofstream cfg(dir + "/scenario.toml");
  cfg << "[scenario]\ntask = \"enhanced-hop\"\nseed = 5\ncycles = 30\n"
      << "[sim]\ndt_s = 2e-4\n[trajopt]\nnodes_descent = 20\nnodes_ascent = 20\n"
      << "[task]\nrelease_gauge_pa = 150000.0\n"
      << "[sweep]\ntank_gauge_pa = [120000.0, 180000.0]\n";
  cfg.close();

  const std::string cli = HOPPER_CLI_PATH;
  auto run_once = [&](const std::string& out) {
    const std::string cmd = cli + std::string(" simulate --config ") + dir +
                            "/scenario.toml --seed 5 --jobs 2 --out " + out +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  c.require(run_once(dir + "/a"), "first run succeeded");
  c.require(run_once(dir + "/b"), "second run succeeded");

  size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir + "/a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir + "/a");
    const auto other = fs::path(dir + "/b") / rel;
    c.require(fs::exists(other), "matching output exists: " + rel.string());
    if (fs::exists(other)) {
      c.require(slurp(entry.path().string()) == slurp(other.string()),
                "byte-identical: " + rel.string());
      ++compared;
    }
  }
  c.require(compared >= 5, "outputs were produced");
  c.note("files_compared", compared);
  c.finish();
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion1_pneumatic_model();
  criterion2_sysid_roundtrip();
  criterion3_dynamics();
  criterion4_collocation();
  criterion5_paper_reproduction();
  criterion6_energy_audit();
  criterion7_determinism();
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED")
            << " (" << total << " s total)\n";
  return g_failures == 0 ? 0 : 1;
}
