#include "hopper/tasks.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <thread>

namespace hopper {

namespace fs = std::filesystem;

namespace {

void dump_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

nlohmann::json apex_stats(const std::vector<PointCycle>& cycles) {
  nlohmann::json j;
  if (cycles.empty()) return j;
  double mn = 1e300, mx = -1e300, sum = 0;
  for (const auto& c : cycles) {
    mn = std::min(mn, c.apex_height_m);
    mx = std::max(mx, c.apex_height_m);
    sum += c.apex_height_m;
  }
  j["mean_m"] = sum / cycles.size();
  j["min_m"] = mn;
  j["max_m"] = mx;
  j["count"] = cycles.size();
  return j;
}

}  // namespace

nlohmann::json trajsolution_to_json(const TrajSolution& sol) {
  nlohmann::json j;
  j["T_desc_s"] = sol.T_desc;
  j["T_asc_s"] = sol.T_asc;
  j["t_desc_s"] = sol.t_desc;
  j["L_desc_m"] = sol.L_desc;
  j["V_desc_mps"] = sol.V_desc;
  j["F_desc_n"] = sol.F_desc;
  j["t_asc_s"] = sol.t_asc;
  j["L_asc_m"] = sol.L_asc;
  j["V_asc_mps"] = sol.V_asc;
  j["F_asc_n"] = sol.F_asc;
  j["predicted_apex_height_m"] = sol.predicted_apex_height_m;
  j["valve_trigger_s"] = sol.valve_trigger_s;
  j["objective"] = sol.objective;
  j["max_defect"] = sol.max_defect;
  j["max_path_violation"] = sol.max_path_violation;
  j["stationarity"] = sol.stationarity;
  j["converged"] = sol.converged;
  j["plan_tank_pa"] = sol.plan_tank_pa;
  j["tank_volume_m3"] = sol.tank_volume_m3;
  j["m_tilde_kg"] = sol.m_tilde_kg;
  j["apex_z_m"] = sol.apex_z_m;
  j["used_actuator"] = sol.used_actuator;
  return j;
}

TrajSolution trajsolution_from_json(const nlohmann::json& j) {
  TrajSolution s;
  s.T_desc = j.at("T_desc_s").get<double>();
  s.T_asc = j.at("T_asc_s").get<double>();
  s.t_desc = j.at("t_desc_s").get<std::vector<double>>();
  s.L_desc = j.at("L_desc_m").get<std::vector<double>>();
  s.V_desc = j.at("V_desc_mps").get<std::vector<double>>();
  s.F_desc = j.at("F_desc_n").get<std::vector<double>>();
  s.t_asc = j.at("t_asc_s").get<std::vector<double>>();
  s.L_asc = j.at("L_asc_m").get<std::vector<double>>();
  s.V_asc = j.at("V_asc_mps").get<std::vector<double>>();
  s.F_asc = j.at("F_asc_n").get<std::vector<double>>();
  s.predicted_apex_height_m = j.at("predicted_apex_height_m").get<double>();
  s.valve_trigger_s = j.at("valve_trigger_s").get<double>();
  s.objective = j.at("objective").get<double>();
  s.max_defect = j.at("max_defect").get<double>();
  s.max_path_violation = j.at("max_path_violation").get<double>();
  s.stationarity = j.at("stationarity").get<double>();
  s.converged = j.at("converged").get<bool>();
  s.plan_tank_pa = j.at("plan_tank_pa").get<double>();
  s.tank_volume_m3 = j.at("tank_volume_m3").get<double>();
  s.m_tilde_kg = j.at("m_tilde_kg").get<double>();
  s.apex_z_m = j.at("apex_z_m").get<double>();
  s.used_actuator = j.at("used_actuator").get<bool>();
  return s;
}

void write_solution_files(const TrajSolution& sol, const std::string& dir,
                          const std::string& stem) {
  dump_json(trajsolution_to_json(sol), dir + "/" + stem + ".json");
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < sol.t_desc.size(); ++i)
    rows.push_back({0.0, sol.t_desc[i], sol.L_desc[i], sol.V_desc[i], sol.F_desc[i]});
  for (size_t i = 0; i < sol.t_asc.size(); ++i)
    rows.push_back(
        {1.0, sol.T_desc + sol.t_asc[i], sol.L_asc[i], sol.V_asc[i], sol.F_asc[i]});
  write_csv(dir + "/" + stem + ".csv", {"phase", "t_s", "L_m", "V_mps", "F_n"}, rows);
}

void write_point_trace_csv(const PointTrace& trace, const std::string& path) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.rows.size());
  for (const auto& r : trace.rows)
    rows.push_back({r.t, r.z, r.v, r.f_motor, r.f_pneu, r.tank_pa, r.delta,
                    static_cast<double>(r.phase), static_cast<double>(r.valve)});
  write_csv(path,
            {"t", "z", "zd", "f_motor", "f_pneu", "P_tank", "delta", "phase", "valve"},
            rows);
}

void write_sim_trace_csv(const SimTrace& trace, const std::string& path) {
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.rows.size());
  for (const auto& r : trace.rows)
    rows.push_back({r.t, r.q(0), r.q(1), r.q(2), r.q(3), r.qdot(0), r.qdot(1),
                    r.qdot(2), r.qdot(3), r.tau(0), r.tau(1), r.f_pneu,
                    r.f_contact(0), r.f_contact(1), r.tank_pa, r.delta,
                    static_cast<double>(r.mode), static_cast<double>(r.valve)});
  write_csv(path,
            {"t", "x", "z", "q_hip", "q_knee", "xd", "zd", "qd_hip", "qd_knee",
             "tau_hip", "tau_knee", "f_pneu", "fc_x", "fc_z", "P_tank", "delta",
             "mode", "valve"},
            rows);
}

void write_ledger_csv(const EnergyLedger& led, const std::string& path) {
  std::vector<std::vector<double>> rows;
  for (const auto& c : led.cycles)
    rows.push_back({static_cast<double>(c.cycle), c.w_pump_j, c.delta_e_tank_j,
                    c.e_tank_j, c.w_pa_j, c.ke_liftoff_j, c.w_motor_j,
                    c.impact_loss_j, c.audit_residual_j, c.throughput_j,
                    c.released ? 1.0 : 0.0, c.complete ? 1.0 : 0.0});
  write_csv(path,
            {"cycle", "w_pump_j", "delta_e_tank_j", "e_tank_j", "w_pa_j",
             "ke_liftoff_j", "w_motor_j", "impact_loss_j", "audit_residual_j",
             "throughput_j", "released", "complete"},
            rows);
}

// --- sysid -----------------------------------------------------------------

nlohmann::json run_sysid(const CsvTable& table, const std::string& kind,
                         const PumpGeometry& geom, const std::string& out_dir) {
  nlohmann::json rep;
  fs::create_directories(out_dir);
  if (kind == "pump") {
    const int ix = table.column("x_m");
    const int if_ = table.column("force_n");
    const int ip = table.column("tank_pa");
    const int is = table.column("speed_mps");
    if (ix < 0 || if_ < 0 || ip < 0 || is < 0) {
      std::string have;
      for (const auto& h : table.header) have += h + " ";
      throw CsvError("pump csv needs columns x_m,force_n,tank_pa,speed_mps; got: " + have);
    }
    std::vector<ForceDisplacementSample> samples;
    for (const auto& r : table.rows)
      samples.push_back({r[ix], r[if_], r[ip], r[is]});
    const PumpFitReport fr = fit_pump_model(samples, geom);
    rep["kind"] = "pump";
    rep["coefficients"] = {{"m1", fr.coefficients.m1}, {"b1", fr.coefficients.b1},
                           {"m2", fr.coefficients.m2}, {"b2", fr.coefficients.b2},
                           {"c1", fr.coefficients.c1}, {"c2", fr.coefficients.c2},
                           {"c3", fr.coefficients.c3}, {"c4", fr.coefficients.c4},
                           {"c5", fr.coefficients.c5}, {"c6", fr.coefficients.c6}};
    rep["rmse"] = {{"stage1", fr.rmse_stage1},
                   {"transition", fr.rmse_transition},
                   {"stage2", fr.rmse_stage2},
                   {"open", fr.rmse_open},
                   {"total", fr.rmse_total}};
    rep["samples"] = {{"stage1", fr.n_stage1},
                      {"transition", fr.n_transition},
                      {"stage2", fr.n_stage2},
                      {"open", fr.n_open}};
    rep["continuity"] = {{"l1", fr.continuity_l1},
                         {"l2", fr.continuity_l2},
                         {"valve", fr.continuity_valve}};
    // residual csv
    std::vector<std::vector<double>> rows;
    TankState tank;
    for (const auto& s : samples) {
      tank.pressure_pa = s.tank_pa;
      const double pred = s.speed_mps < 0
                              ? fitted_pump_force(fr.coefficients, geom, tank, s.x_m,
                                                  s.speed_mps)
                              : 0.0;
      rows.push_back({s.x_m, s.force_n, pred, pred - s.force_n});
    }
    write_csv(out_dir + "/residuals.csv", {"x_m", "force_n", "fit_n", "residual_n"},
              rows);
  } else if (kind == "transient") {
    const int it = table.column("t_s");
    const int id = table.column("delta");
    if (it < 0 || id < 0) {
      std::string have;
      for (const auto& h : table.header) have += h + " ";
      throw CsvError("transient csv needs columns t_s,delta; got: " + have);
    }
    std::vector<StepResponseSample> samples;
    for (const auto& r : table.rows) samples.push_back({r[it], r[id]});
    const TransientFitReport fr = fit_transient(samples);
    rep["kind"] = "transient";
    rep["k1"] = fr.k1;
    rep["k2"] = fr.k2;
    rep["k3"] = fr.k3;
    rep["rmse"] = fr.rmse;
    rep["stable"] = fr.stable;
    rep["degenerate_inertia"] = fr.degenerate_inertia;
    rep["starts_evaluated"] = fr.starts_evaluated;
    ActuatorModel act;
    act.k1 = fr.k1;
    act.k2 = fr.k2;
    std::vector<std::vector<double>> rows;
    for (const auto& s : samples) {
      const double pred = transient_step_response(act, s.t_s);
      rows.push_back({s.t_s, s.delta, pred, pred - s.delta});
    }
    write_csv(out_dir + "/residuals.csv", {"t_s", "delta", "fit", "residual"}, rows);
  } else {
    throw CsvError("unknown sysid kind '" + kind + "' (expected pump or transient)");
  }
  dump_json(rep, out_dir + "/fit.json");
  return rep;
}

// --- simulation pipelines ----------------------------------------------------

namespace {

struct PointRun {
  PointTrace trace;
  EnergyLedger ledger;
  TrajSolution plan;
  double final_tank_pa = kAtmospherePa;
};

TrajSolution solve_periodic_plan(const Scenario& s, double mass, double p_abs) {
  TrajOptConfig c = s.trajopt_config(TrajObjective::Periodic, false, p_abs);
  c.m_tilde_kg = mass;
  return solve(build_problem(c));
}

TrajSolution solve_explosive_plan(const Scenario& s, double mass, double p_abs,
                                  bool use_actuator) {
  TrajOptConfig c = s.trajopt_config(TrajObjective::Explosive, use_actuator, p_abs);
  c.m_tilde_kg = mass;
  return solve(build_problem(c));
}

PointRun run_replay(const Scenario& s, double mass, const TrajSolution& plan,
                    const PlanReplayController::Options& opts, double tank_abs_pa,
                    int cycles, double start_apex_height) {
  PointMassConfig cfg = s.point_mass_config();
  cfg.mass_kg = mass;
  TankState tank = s.initial_tank();
  tank.pressure_pa = tank_abs_pa;
  PointWorld w = make_point_world(cfg, tank, cfg.leg_max_m + start_apex_height);
  PlanReplayController ctl(cfg, opts);
  PointRun run;
  run.plan = plan;
  run.trace = run_point_cycles(w, ctl, cycles);
  run.ledger = ledger_from_point_trace(run.trace, cfg, s.tank_volume_m3);
  run.final_tank_pa = w.tank.pressure_pa;
  return run;
}

PlanReplayController::Options replay_options(const Scenario& s,
                                             const TrajSolution& plan) {
  PlanReplayController::Options o;
  o.descent = descent_profile(plan);
  o.ascent = ascent_profile(plan);
  o.plan_tank_pa = plan.plan_tank_pa;
  o.trigger_lead_s = s.trigger_lead_s;
  return o;
}

// Motor-only baseline: no braking plan, envelope-limited ascent, tank at
// atmosphere. The apex converges to the motors' sustainable hop in a few
// cycles; the last apex is the baseline.
double motor_only_apex(const Scenario& s, double mass) {
  PlanReplayController::Options o;
  o.greedy_ascent = true;
  const TrajSolution empty_plan;
  PointRun run = run_replay(s, mass, empty_plan, o, kAtmospherePa, 8,
                            s.charge_hop_height_m);
  if (run.trace.cycles.empty()) return 0.0;
  return run.trace.cycles.back().apex_height_m;
}

nlohmann::json cycles_json(const PointTrace& tr) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : tr.cycles) {
    arr.push_back({{"cycle", c.cycle},
                   {"touchdown_t", c.touchdown_t},
                   {"liftoff_t", c.liftoff_t},
                   {"apex_height_m", c.apex_height_m},
                   {"v_liftoff", c.v_liftoff},
                   {"ke_liftoff_j", c.ke_liftoff_j},
                   {"tank_pa_start", c.tank_pa_start},
                   {"tank_pa_end", c.tank_pa_end},
                   {"min_leg_m", c.min_leg_m},
                   {"joint_stop_loss_j", c.joint_stop_loss_j},
                   {"released", c.released}});
  }
  return arr;
}

void write_point_run(const PointRun& run, const std::string& dir) {
  fs::create_directories(dir);
  write_point_trace_csv(run.trace, dir + "/trace.csv");
  write_ledger_csv(run.ledger, dir + "/ledger.csv");
  dump_json(cycles_json(run.trace), dir + "/events.json");
}

struct SweepPoint {
  double axis = 0;
  double apex_m = 0;
  double ke_liftoff_j = 0;
  double plateau_pa = 0;
  bool released = false;
};

// run sweep points over a small thread pool; results land in index order
template <typename Fn>
std::vector<SweepPoint> parallel_sweep(const std::vector<double>& axis, int jobs,
                                       Fn&& fn) {
  std::vector<SweepPoint> out(axis.size());
  std::vector<std::exception_ptr> errors(axis.size());
  std::atomic<size_t> next{0};
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(axis.size())));
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= axis.size()) return;
      try {
        out[i] = fn(axis[i], i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

nlohmann::json run_optimize(const Scenario& s, const std::string& out_dir,
                            bool verbose) {
  (void)verbose;
  fs::create_directories(out_dir);
  nlohmann::json summary;
  summary["task"] = task_name(s.task);
  const double p0 = s.initial_tank().pressure_pa;
  const double p_release = kAtmospherePa + s.release_gauge_pa;

  switch (s.task) {
    case TaskKind::PeriodicCharge: {
      const TrajSolution sol = solve_periodic_plan(s, s.robot.projected_mass_kg, p0);
      write_solution_files(sol, out_dir, "solution_periodic");
      summary["periodic_apex_m"] = sol.predicted_apex_height_m;
      summary["max_defect"] = sol.max_defect;
      break;
    }
    case TaskKind::MotorOnlyMax: {
      const TrajSolution sol =
          solve_explosive_plan(s, s.robot.projected_mass_kg, kAtmospherePa, false);
      write_solution_files(sol, out_dir, "solution_motor_only");
      summary["predicted_apex_m"] = sol.predicted_apex_height_m;
      summary["max_defect"] = sol.max_defect;
      break;
    }
    default: {
      const TrajSolution per = solve_periodic_plan(s, s.robot.projected_mass_kg, p0);
      write_solution_files(per, out_dir, "solution_periodic");
      const TrajSolution exp_ =
          solve_explosive_plan(s, s.robot.projected_mass_kg, p_release, true);
      write_solution_files(exp_, out_dir, "solution_explosive");
      summary["periodic_apex_m"] = per.predicted_apex_height_m;
      summary["predicted_apex_m"] = exp_.predicted_apex_height_m;
      summary["valve_trigger_s"] = exp_.valve_trigger_s;
      summary["max_defect"] = std::max(per.max_defect, exp_.max_defect);
      break;
    }
  }
  dump_json(summary, out_dir + "/optimize_summary.json");
  return summary;
}

nlohmann::json run_simulate(const Scenario& s, const std::string& out_dir, int jobs,
                            bool verbose) {
  (void)verbose;
  fs::create_directories(out_dir);
  nlohmann::json summary;
  summary["task"] = task_name(s.task);
  summary["seed"] = s.seed;
  summary["mass_kg"] = s.robot.projected_mass_kg;
  const double p_init = s.initial_tank().pressure_pa;
  const double p_release = kAtmospherePa + s.release_gauge_pa;
  const double mass = s.robot.projected_mass_kg;

  const TrajSolution plan = solve_periodic_plan(s, mass, p_init);
  write_solution_files(plan, out_dir, "solution_periodic");

  switch (s.task) {
    case TaskKind::PeriodicCharge: {
      PointRun run =
          run_replay(s, mass, plan, replay_options(s, plan), p_init, s.cycles,
                     s.charge_hop_height_m);
      write_point_run(run, out_dir);
      summary["apex"] = apex_stats(run.trace.cycles);
      summary["final_tank_pa"] = run.final_tank_pa;
      summary["final_tank_gauge_pa"] = run.final_tank_pa - kAtmospherePa;
      nlohmann::json pressures = nlohmann::json::array();
      for (const auto& c : run.trace.cycles) pressures.push_back(c.tank_pa_end);
      summary["cycle_tank_pa"] = pressures;
      if (run.trace.cycles.size() >= 2) {
        const auto& cs = run.trace.cycles;
        summary["last_cycle_dp_pa"] =
            cs.back().tank_pa_end - cs[cs.size() - 2].tank_pa_end;
      }
      break;
    }
    case TaskKind::EnhancedHop:
    case TaskKind::ConsecutiveEnhanced:
    case TaskKind::PlatformJump: {
      const double baseline = motor_only_apex(s, mass);
      PlanReplayController::Options o = replay_options(s, plan);
      o.release_enabled = true;
      o.release_pressure_pa = p_release;
      o.max_releases = s.task == TaskKind::ConsecutiveEnhanced ? s.releases : 1;
      PointRun run = run_replay(s, mass, plan, o, p_init, s.cycles,
                                s.charge_hop_height_m);
      write_point_run(run, out_dir);

      nlohmann::json releases = nlohmann::json::array();
      double best_apex = 0;
      double first_release_ke = 0, regular_ke = 0;
      for (const auto& c : run.trace.cycles) {
        if (c.released) {
          releases.push_back({{"cycle", c.cycle},
                              {"apex_m", c.apex_height_m},
                              {"ke_liftoff_j", c.ke_liftoff_j},
                              {"release_pa", c.tank_pa_start}});
          best_apex = std::max(best_apex, c.apex_height_m);
          if (first_release_ke == 0) first_release_ke = c.ke_liftoff_j;
        } else if (c.ke_liftoff_j > 0) {
          regular_ke = c.ke_liftoff_j;
        }
      }
      summary["apex"] = apex_stats(run.trace.cycles);
      summary["releases"] = releases;
      summary["released"] = !releases.empty();
      summary["enhanced_apex_m"] = best_apex;
      summary["motor_only_apex_m"] = baseline;
      summary["amplification_factor"] = baseline > 0 ? best_apex / baseline : 0.0;
      summary["enhanced_ke_j"] = first_release_ke;
      summary["regular_ke_j"] = regular_ke;
      summary["ke_ratio"] = regular_ke > 0 ? first_release_ke / regular_ke : 0.0;
      summary["final_tank_pa"] = run.final_tank_pa;
      if (s.task == TaskKind::PlatformJump) {
        summary["platform_height_m"] = s.platform_height_m;
        summary["cleared"] = best_apex >= s.platform_height_m;
      }
      break;
    }
    case TaskKind::MotorOnlyMax: {
      const TrajSolution sol = solve_explosive_plan(s, mass, kAtmospherePa, false);
      write_solution_files(sol, out_dir, "solution_motor_only");
      PlanReplayController::Options o;
      o.greedy_ascent = true;
      PointRun run = run_replay(s, mass, sol, o, kAtmospherePa, 8,
                                s.charge_hop_height_m);
      write_point_run(run, out_dir);
      summary["apex"] = apex_stats(run.trace.cycles);
      summary["predicted_apex_m"] = sol.predicted_apex_height_m;
      summary["realized_apex_m"] =
          run.trace.cycles.empty() ? 0.0 : run.trace.cycles.back().apex_height_m;
      break;
    }
  }

  // sweeps
  if (!s.sweep_tank_gauge_pa.empty()) {
    auto points = parallel_sweep(
        s.sweep_tank_gauge_pa, jobs, [&](double gauge, size_t idx) {
          PlanReplayController::Options o = replay_options(s, plan);
          o.release_enabled = true;
          o.release_cycle = 1;
          PointRun run = run_replay(s, mass, plan, o, kAtmospherePa + gauge, 1,
                                    s.charge_hop_height_m);
          write_point_run(run, out_dir + "/pressure_" + std::to_string(idx));
          SweepPoint pt;
          pt.axis = gauge;
          if (!run.trace.cycles.empty()) {
            pt.apex_m = run.trace.cycles.back().apex_height_m;
            pt.ke_liftoff_j = run.trace.cycles.back().ke_liftoff_j;
            pt.released = run.trace.cycles.back().released;
          }
          return pt;
        });
    std::vector<std::vector<double>> rows;
    for (const auto& p : points)
      rows.push_back({p.axis, kAtmospherePa + p.axis, p.apex_m, p.ke_liftoff_j,
                      p.released ? 1.0 : 0.0});
    write_csv(out_dir + "/sweep_pressure.csv",
              {"tank_gauge_pa", "tank_abs_pa", "apex_m", "ke_liftoff_j", "released"},
              rows);
    summary["sweep_pressure_points"] = points.size();
  }

  if (!s.sweep_mass_kg.empty()) {
    auto points = parallel_sweep(s.sweep_mass_kg, jobs, [&](double m, size_t idx) {
      // full pipeline per mass: plan, charge to plateau, release at plateau
      const TrajSolution mplan = solve_periodic_plan(s, m, p_init);
      PointRun charge = run_replay(s, m, mplan, replay_options(s, mplan), p_init,
                                   s.cycles, s.charge_hop_height_m);
      const double plateau = charge.final_tank_pa;
      PlanReplayController::Options o = replay_options(s, mplan);
      o.release_enabled = true;
      o.release_cycle = 1;
      PointRun rel = run_replay(s, m, mplan, o, plateau, 1, s.charge_hop_height_m);
      write_point_run(rel, out_dir + "/mass_" + std::to_string(idx));
      SweepPoint pt;
      pt.axis = m;
      pt.plateau_pa = plateau;
      if (!rel.trace.cycles.empty()) {
        pt.apex_m = rel.trace.cycles.back().apex_height_m;
        pt.ke_liftoff_j = rel.trace.cycles.back().ke_liftoff_j;
        pt.released = rel.trace.cycles.back().released;
      }
      return pt;
    });
    std::vector<std::vector<double>> rows;
    for (const auto& p : points)
      rows.push_back({p.axis, p.plateau_pa, p.plateau_pa - kAtmospherePa, p.apex_m,
                      p.ke_liftoff_j, p.released ? 1.0 : 0.0});
    write_csv(out_dir + "/sweep_mass.csv",
              {"mass_kg", "plateau_abs_pa", "plateau_gauge_pa", "apex_m",
               "ke_liftoff_j", "released"},
              rows);
    summary["sweep_mass_points"] = points.size();
  }

  dump_json(summary, out_dir + "/summary.json");
  return summary;
}

nlohmann::json run_report(const std::string& run_dir, const std::string& out_dir) {
  if (!fs::exists(run_dir)) throw CsvError("report: run directory does not exist");
  std::vector<fs::path> pressure_files, mass_files, ledger_files, trace_files;
  std::vector<fs::path> all;
  for (const auto& e : fs::recursive_directory_iterator(run_dir))
    if (e.is_regular_file()) all.push_back(e.path());
  std::sort(all.begin(), all.end());
  for (const auto& p : all) {
    if (p.filename() == "sweep_pressure.csv") pressure_files.push_back(p);
    else if (p.filename() == "sweep_mass.csv") mass_files.push_back(p);
    else if (p.filename() == "ledger.csv") ledger_files.push_back(p);
    else if (p.filename() == "trace.csv") trace_files.push_back(p);
  }
  if (pressure_files.empty() && mass_files.empty() && ledger_files.empty() &&
      trace_files.empty())
    throw CsvError("report: no completed run outputs under " + run_dir);

  fs::create_directories(out_dir);
  nlohmann::json summary;

  auto concat = [&](const std::vector<fs::path>& files, const std::string& out_name,
                    const std::vector<std::string>& cols) {
    std::vector<std::vector<double>> rows;
    int run_id = 0;
    for (const auto& f : files) {
      const CsvTable t = read_csv(f.string());
      std::vector<int> idx;
      for (const auto& c : cols) {
        const int i = t.column(c);
        if (i < 0) throw CsvError("report: " + f.string() + " missing column " + c);
        idx.push_back(i);
      }
      for (const auto& r : t.rows) {
        std::vector<double> row{static_cast<double>(run_id)};
        for (int i : idx) row.push_back(r[i]);
        rows.push_back(row);
      }
      ++run_id;
    }
    std::vector<std::string> header{"run"};
    header.insert(header.end(), cols.begin(), cols.end());
    write_csv(out_dir + "/" + out_name, header, rows);
    return rows.size();
  };

  if (!pressure_files.empty())
    summary["height_vs_pressure_rows"] =
        concat(pressure_files, "report_height_vs_pressure.csv",
               {"tank_gauge_pa", "tank_abs_pa", "apex_m"});
  if (!mass_files.empty())
    summary["height_vs_mass_rows"] = concat(
        mass_files, "report_height_vs_mass.csv", {"mass_kg", "plateau_abs_pa", "apex_m"});
  if (!ledger_files.empty())
    summary["energy_vs_cycle_rows"] =
        concat(ledger_files, "report_energy_vs_cycle.csv",
               {"cycle", "w_pump_j", "delta_e_tank_j", "e_tank_j", "w_pa_j"});
  if (!trace_files.empty())
    summary["hip_trajectory_rows"] =
        concat({trace_files.front()}, "report_hip_trajectory.csv", {"t", "z"});

  dump_json(summary, out_dir + "/report_summary.json");
  return summary;
}

}  // namespace hopper
