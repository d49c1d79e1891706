#include "hopper/scenario.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "hopper/toml.hpp"

namespace hopper {

const char* task_name(TaskKind k) {
  switch (k) {
    case TaskKind::PeriodicCharge: return "periodic-charge";
    case TaskKind::EnhancedHop: return "enhanced-hop";
    case TaskKind::ConsecutiveEnhanced: return "consecutive-enhanced";
    case TaskKind::PlatformJump: return "platform-jump";
    case TaskKind::MotorOnlyMax: return "motor-only-max";
  }
  return "?";
}

ConfigError::ConfigError(std::vector<std::string> problems_in)
    : std::runtime_error([&problems_in] {
        std::ostringstream os;
        os << "invalid scenario configuration (" << problems_in.size() << " problem"
           << (problems_in.size() == 1 ? "" : "s") << "):";
        for (const auto& p : problems_in) os << "\n  - " << p;
        return os.str();
      }()),
      problems(std::move(problems_in)) {}

MotorEnvelope motor_envelope_from_robot(const RobotModel& model) {
  const double L_nom = 0.5 * (model.leg_length_min_m + model.leg_length_max_m);
  const double lt = model.thigh_length_m, ls = model.shank_length_m;
  const double cq = (L_nom * L_nom - lt * lt - ls * ls) / (2.0 * lt * ls);
  const double q = std::acos(std::clamp(cq, -1.0, 1.0));
  const double jac = lt * ls * std::sin(q) / L_nom;  // |dL/dq_knee| at L_nom
  MotorEnvelope env;
  env.f_max_n = model.knee_drive_ratio() * model.motor_max_torque_nm / jac;
  env.v_nom_mps = model.motor_max_speed_rads / model.belt_ratio * jac;
  env.allow_pull = false;
  return env;
}

PointMassConfig Scenario::point_mass_config() const {
  PointMassConfig c;
  c.mass_kg = robot.projected_mass_kg;
  c.gravity = robot.gravity;
  c.leg_min_m = robot.leg_length_min_m;
  c.leg_max_m = robot.leg_length_max_m;
  c.dt_s = sim.dt_s;
  c.max_time_s = sim.max_time_s;
  c.pneu = pneu;
  c.motor = motor_envelope();
  return c;
}

TrajOptConfig Scenario::trajopt_config(TrajObjective obj, bool use_actuator,
                                       double tank_pressure_abs_pa) const {
  TrajOptConfig c;
  c.m_tilde_kg = robot.projected_mass_kg;
  c.gravity = robot.gravity;
  c.leg_min_m = robot.leg_length_min_m;
  c.leg_max_m = robot.leg_length_max_m;
  c.apex_z_m = robot.leg_length_max_m +
               (obj == TrajObjective::Periodic ? charge_hop_height_m
                                               : plan_apex_height_m);
  c.n_desc = nodes_descent;
  c.n_asc = nodes_ascent;
  c.motor = motor_envelope();
  c.objective = obj;
  c.use_actuator = use_actuator;
  c.cost_c = cost_c;
  c.pneu = pneu;
  c.tank_pressure_pa = tank_pressure_abs_pa;
  c.tank_volume_m3 = tank_volume_m3;
  c.valve_lead_s = -1.0;  // planner uses the transient rise-time lead
  c.nlp.tol_feas = nlp_tol;
  c.nlp.tol_stat = nlp_tol;
  return c;
}

TankState Scenario::initial_tank() const {
  TankState t;
  t.pressure_pa = kAtmospherePa + initial_tank_gauge_pa;
  t.volume_m3 = tank_volume_m3;
  return t;
}

MotorEnvelope Scenario::motor_envelope() const {
  return motor_envelope_from_robot(robot);
}

void Scenario::validate() const {
  std::vector<std::string> bad;
  auto expect = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  expect(model == "pointmass" || model == "full",
         "sim.model must be 'pointmass' or 'full'");
  expect(cycles >= 1, "scenario.cycles must be >= 1");
  expect(charge_hop_height_m > 0, "sim.charge_hop_height_m must be > 0");
  expect(plan_apex_height_m >= 0, "trajopt.apex_height_m must be >= 0");
  expect(release_gauge_pa > 0, "task.release_gauge_pa must be > 0");
  expect(releases >= 1, "task.releases must be >= 1");
  expect(platform_height_m > 0, "task.platform_height_m must be > 0");
  expect(trigger_lead_s >= 0, "task.trigger_lead_s must be >= 0");
  expect(nodes_descent >= 5 && nodes_ascent >= 5,
         "trajopt node counts must be >= 5");
  expect(initial_tank_gauge_pa >= 0, "pneumatic.initial_tank_gauge_pa must be >= 0");
  expect(tank_volume_m3 > 0, "pneumatic.tank_volume_m3 must be > 0");
  for (double p : sweep_tank_gauge_pa)
    expect(p > 0, "sweep.tank_gauge_pa entries must be > 0");
  for (double m : sweep_mass_kg)
    expect(m > 0, "sweep.robot_mass_kg entries must be > 0");
  try {
    robot.validate();
  } catch (const std::exception& e) {
    bad.push_back(e.what());
  }
  try {
    pneu.validate();
  } catch (const std::exception& e) {
    bad.push_back(e.what());
  }
  try {
    sim.validate();
  } catch (const std::exception& e) {
    bad.push_back(e.what());
  }
  try {
    motor_params.validate();
  } catch (const std::exception& e) {
    bad.push_back(e.what());
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
}

namespace {

struct Reader {
  std::vector<std::string> problems;

  void unknown_keys(const nlohmann::json& obj, const std::string& where,
                    const std::set<std::string>& known) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!known.count(it.key()))
        problems.push_back(where + ": unknown key '" + it.key() + "'");
    }
  }

  double num(const nlohmann::json& obj, const std::string& where,
             const std::string& key, double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      problems.push_back(where + "." + key + ": expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  int integer(const nlohmann::json& obj, const std::string& where,
              const std::string& key, int fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      problems.push_back(where + "." + key + ": expected an integer");
      return fallback;
    }
    return v.get<int>();
  }

  std::string str(const nlohmann::json& obj, const std::string& where,
                  const std::string& key, const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) {
      problems.push_back(where + "." + key + ": expected a string");
      return fallback;
    }
    return v.get<std::string>();
  }

  bool boolean(const nlohmann::json& obj, const std::string& where,
               const std::string& key, bool fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) {
      problems.push_back(where + "." + key + ": expected a boolean");
      return fallback;
    }
    return v.get<bool>();
  }

  std::vector<double> num_list(const nlohmann::json& obj, const std::string& where,
                               const std::string& key) {
    std::vector<double> out;
    if (!obj.is_object() || !obj.contains(key)) return out;
    const auto& v = obj.at(key);
    if (!v.is_array()) {
      problems.push_back(where + "." + key + ": expected an array of numbers");
      return out;
    }
    for (const auto& e : v) {
      if (!e.is_number()) {
        problems.push_back(where + "." + key + ": expected an array of numbers");
        return {};
      }
      out.push_back(e.get<double>());
    }
    return out;
  }
};

}  // namespace

Scenario scenario_from_json(const nlohmann::json& doc) {
  Reader r;
  Scenario s;

  r.unknown_keys(doc, "(root)",
                 {"scenario", "robot", "pneumatic", "controller", "motor", "sim",
                  "trajopt", "task", "sweep"});

  const auto sc = doc.value("scenario", nlohmann::json::object());
  r.unknown_keys(sc, "scenario", {"task", "seed", "cycles"});
  const std::string task = r.str(sc, "scenario", "task", "periodic-charge");
  if (task == "periodic-charge") s.task = TaskKind::PeriodicCharge;
  else if (task == "enhanced-hop") s.task = TaskKind::EnhancedHop;
  else if (task == "consecutive-enhanced") s.task = TaskKind::ConsecutiveEnhanced;
  else if (task == "platform-jump") s.task = TaskKind::PlatformJump;
  else if (task == "motor-only-max") s.task = TaskKind::MotorOnlyMax;
  else r.problems.push_back("scenario.task: unknown task '" + task + "'");
  s.seed = static_cast<uint64_t>(r.integer(sc, "scenario", "seed", 1));
  s.cycles = r.integer(sc, "scenario", "cycles", 40);

  const auto rb = doc.value("robot", nlohmann::json::object());
  r.unknown_keys(rb, "robot",
                 {"shank_length_m", "thigh_length_m", "belt_ratio",
                  "knee_motor_count", "motor_max_torque_nm", "motor_max_speed_rpm",
                  "leg_length_min_m", "leg_length_max_m", "estimated"});
  s.robot.shank_length_m = r.num(rb, "robot", "shank_length_m", s.robot.shank_length_m);
  s.robot.thigh_length_m = r.num(rb, "robot", "thigh_length_m", s.robot.thigh_length_m);
  s.robot.belt_ratio = r.num(rb, "robot", "belt_ratio", s.robot.belt_ratio);
  s.robot.knee_motor_count =
      r.integer(rb, "robot", "knee_motor_count", s.robot.knee_motor_count);
  s.robot.motor_max_torque_nm =
      r.num(rb, "robot", "motor_max_torque_nm", s.robot.motor_max_torque_nm);
  const double rpm = r.num(rb, "robot", "motor_max_speed_rpm",
                           s.robot.motor_max_speed_rads * 60.0 / (2.0 * M_PI));
  s.robot.motor_max_speed_rads = rpm * 2.0 * M_PI / 60.0;
  s.robot.leg_length_min_m =
      r.num(rb, "robot", "leg_length_min_m", s.robot.leg_length_min_m);
  s.robot.leg_length_max_m =
      r.num(rb, "robot", "leg_length_max_m", s.robot.leg_length_max_m);

  const auto rbe = rb.is_object() ? rb.value("estimated", nlohmann::json::object())
                                  : nlohmann::json::object();
  r.unknown_keys(rbe, "robot.estimated",
                 {"base_mass_kg", "thigh_mass_kg", "shank_mass_kg",
                  "thigh_inertia_kgm2", "shank_inertia_kgm2", "thigh_com_m",
                  "shank_com_m", "attach_thigh_m", "attach_shank_m",
                  "projected_mass_kg", "gravity_mps2"});
  s.robot.base_mass_kg = r.num(rbe, "robot.estimated", "base_mass_kg", s.robot.base_mass_kg);
  s.robot.thigh_mass_kg = r.num(rbe, "robot.estimated", "thigh_mass_kg", s.robot.thigh_mass_kg);
  s.robot.shank_mass_kg = r.num(rbe, "robot.estimated", "shank_mass_kg", s.robot.shank_mass_kg);
  s.robot.thigh_inertia_kgm2 =
      r.num(rbe, "robot.estimated", "thigh_inertia_kgm2", s.robot.thigh_inertia_kgm2);
  s.robot.shank_inertia_kgm2 =
      r.num(rbe, "robot.estimated", "shank_inertia_kgm2", s.robot.shank_inertia_kgm2);
  s.robot.thigh_com_m = r.num(rbe, "robot.estimated", "thigh_com_m", s.robot.thigh_com_m);
  s.robot.shank_com_m = r.num(rbe, "robot.estimated", "shank_com_m", s.robot.shank_com_m);
  s.robot.attach_thigh_m =
      r.num(rbe, "robot.estimated", "attach_thigh_m", s.robot.attach_thigh_m);
  s.robot.attach_shank_m =
      r.num(rbe, "robot.estimated", "attach_shank_m", s.robot.attach_shank_m);
  s.robot.projected_mass_kg =
      r.num(rbe, "robot.estimated", "projected_mass_kg", s.robot.projected_mass_kg);
  s.robot.gravity = r.num(rbe, "robot.estimated", "gravity_mps2", s.robot.gravity);

  const auto pn = doc.value("pneumatic", nlohmann::json::object());
  r.unknown_keys(pn, "pneumatic",
                 {"pump_stage1_diameter_m", "pump_stage2_diameter_m", "pump_stroke_m",
                  "pump_stage1_end_m", "pump_stage2_start_m", "actuator_diameter_m",
                  "actuator_stroke_m", "tank_volume_m3", "initial_tank_gauge_pa",
                  "mount_offset_m", "coulomb_friction_n", "valve_min_gauge_pa",
                  "pump_model", "estimated"});
  auto area = [](double dia) { return M_PI * dia * dia / 4.0; };
  const double d1 = r.num(pn, "pneumatic", "pump_stage1_diameter_m", 0.014);
  const double d2 = r.num(pn, "pneumatic", "pump_stage2_diameter_m", 0.017);
  s.pneu.pump.stage1_area_m2 = area(d1);
  s.pneu.pump.stage2_area_m2 = area(d2);
  s.pneu.pump.stroke_m = r.num(pn, "pneumatic", "pump_stroke_m", s.pneu.pump.stroke_m);
  s.pneu.pump.stage1_end_m =
      r.num(pn, "pneumatic", "pump_stage1_end_m", s.pneu.pump.stage1_end_m);
  s.pneu.pump.stage2_start_m =
      r.num(pn, "pneumatic", "pump_stage2_start_m", s.pneu.pump.stage2_start_m);
  const double da = r.num(pn, "pneumatic", "actuator_diameter_m", 0.0325);
  s.pneu.actuator.bore_area_m2 = area(da);
  s.pneu.actuator.stroke_m =
      r.num(pn, "pneumatic", "actuator_stroke_m", s.pneu.actuator.stroke_m);
  s.tank_volume_m3 = r.num(pn, "pneumatic", "tank_volume_m3", s.tank_volume_m3);
  s.initial_tank_gauge_pa =
      r.num(pn, "pneumatic", "initial_tank_gauge_pa", s.initial_tank_gauge_pa);
  s.pneu.mount_offset_m = r.num(pn, "pneumatic", "mount_offset_m", s.pneu.mount_offset_m);
  s.pneu.coulomb_friction_n =
      r.num(pn, "pneumatic", "coulomb_friction_n", s.pneu.coulomb_friction_n);
  s.pneu.valve_min_gauge_pa =
      r.num(pn, "pneumatic", "valve_min_gauge_pa", s.pneu.valve_min_gauge_pa);
  const std::string pm = r.str(pn, "pneumatic", "pump_model", "theoretical");
  if (pm == "theoretical") s.pneu.pump_model = PumpModelKind::Theoretical;
  else if (pm == "fitted") s.pneu.pump_model = PumpModelKind::Fitted;
  else r.problems.push_back("pneumatic.pump_model: expected 'theoretical' or 'fitted'");

  const auto pne = pn.is_object() ? pn.value("estimated", nlohmann::json::object())
                                  : nlohmann::json::object();
  r.unknown_keys(pne, "pneumatic.estimated", {"transient_k1", "transient_k2"});
  s.pneu.actuator.k1 = r.num(pne, "pneumatic.estimated", "transient_k1", s.pneu.actuator.k1);
  s.pneu.actuator.k2 = r.num(pne, "pneumatic.estimated", "transient_k2", s.pneu.actuator.k2);

  const auto ct = doc.value("controller", nlohmann::json::object());
  r.unknown_keys(ct, "controller",
                 {"foot_kp", "foot_kd", "v_desired_mps", "leg_angle_limit_rad",
                  "leg_length_des_m", "kp_angle", "kd_angle", "kp_length", "kd_length",
                  "bezier_peak_gain", "use_jacobian_inverse"});
  s.controller.foot_kp = r.num(ct, "controller", "foot_kp", s.controller.foot_kp);
  s.controller.foot_kd = r.num(ct, "controller", "foot_kd", s.controller.foot_kd);
  s.controller.v_desired_mps =
      r.num(ct, "controller", "v_desired_mps", s.controller.v_desired_mps);
  s.controller.leg_angle_limit_rad =
      r.num(ct, "controller", "leg_angle_limit_rad", s.controller.leg_angle_limit_rad);
  s.controller.leg_length_des_m =
      r.num(ct, "controller", "leg_length_des_m", s.robot.leg_length_max_m);
  s.controller.kp_angle = r.num(ct, "controller", "kp_angle", s.controller.kp_angle);
  s.controller.kd_angle = r.num(ct, "controller", "kd_angle", s.controller.kd_angle);
  s.controller.kp_length = r.num(ct, "controller", "kp_length", s.controller.kp_length);
  s.controller.kd_length = r.num(ct, "controller", "kd_length", s.controller.kd_length);
  s.controller.bezier_peak_gain =
      r.num(ct, "controller", "bezier_peak_gain", s.controller.bezier_peak_gain);
  s.controller.use_jacobian_inverse =
      r.boolean(ct, "controller", "use_jacobian_inverse", false);

  const auto mt = doc.value("motor", nlohmann::json::object());
  r.unknown_keys(mt, "motor", {"estimated"});
  const auto mte = mt.is_object() ? mt.value("estimated", nlohmann::json::object())
                                  : nlohmann::json::object();
  r.unknown_keys(mte, "motor.estimated",
                 {"resistance_ohm", "torque_constant_nmpa", "gear_ratio", "k_e_vspr",
                  "supply_v"});
  s.motor_params.resistance_ohm =
      r.num(mte, "motor.estimated", "resistance_ohm", s.motor_params.resistance_ohm);
  s.motor_params.torque_constant_nmpa = r.num(mte, "motor.estimated",
                                              "torque_constant_nmpa",
                                              s.motor_params.torque_constant_nmpa);
  s.motor_params.gear_ratio =
      r.num(mte, "motor.estimated", "gear_ratio", s.motor_params.gear_ratio);
  s.motor_params.k_e_vspr = r.num(mte, "motor.estimated", "k_e_vspr", s.motor_params.k_e_vspr);
  s.motor_params.supply_v = r.num(mte, "motor.estimated", "supply_v", s.motor_params.supply_v);

  const auto sm = doc.value("sim", nlohmann::json::object());
  r.unknown_keys(sm, "sim",
                 {"dt_s", "model", "max_time_s", "max_cycles", "ground_height_m",
                  "charge_hop_height_m", "contact_flip_probability"});
  s.sim.dt_s = r.num(sm, "sim", "dt_s", s.sim.dt_s);
  s.model = r.str(sm, "sim", "model", s.model);
  s.sim.max_time_s = r.num(sm, "sim", "max_time_s", s.sim.max_time_s);
  s.sim.max_cycles = r.integer(sm, "sim", "max_cycles", s.sim.max_cycles);
  s.sim.ground_height_m = r.num(sm, "sim", "ground_height_m", s.sim.ground_height_m);
  s.charge_hop_height_m = r.num(sm, "sim", "charge_hop_height_m", s.charge_hop_height_m);
  s.sim.contact_flip_probability =
      r.num(sm, "sim", "contact_flip_probability", s.sim.contact_flip_probability);
  s.sim.seed = s.seed;

  const auto to = doc.value("trajopt", nlohmann::json::object());
  r.unknown_keys(to, "trajopt",
                 {"nodes_descent", "nodes_ascent", "cost_c", "apex_height_m",
                  "nlp_tol"});
  s.nodes_descent = r.integer(to, "trajopt", "nodes_descent", s.nodes_descent);
  s.nodes_ascent = r.integer(to, "trajopt", "nodes_ascent", s.nodes_ascent);
  s.cost_c = r.num(to, "trajopt", "cost_c", s.cost_c);
  s.plan_apex_height_m = r.num(to, "trajopt", "apex_height_m", s.plan_apex_height_m);
  s.nlp_tol = r.num(to, "trajopt", "nlp_tol", s.nlp_tol);

  const auto tk = doc.value("task", nlohmann::json::object());
  r.unknown_keys(tk, "task",
                 {"release_gauge_pa", "releases", "platform_height_m",
                  "trigger_lead_s"});
  s.release_gauge_pa = r.num(tk, "task", "release_gauge_pa", s.release_gauge_pa);
  s.releases = r.integer(tk, "task", "releases", s.releases);
  s.platform_height_m = r.num(tk, "task", "platform_height_m", s.platform_height_m);
  s.trigger_lead_s = r.num(tk, "task", "trigger_lead_s", s.trigger_lead_s);

  const auto sw = doc.value("sweep", nlohmann::json::object());
  r.unknown_keys(sw, "sweep", {"tank_gauge_pa", "robot_mass_kg"});
  s.sweep_tank_gauge_pa = r.num_list(sw, "sweep", "tank_gauge_pa");
  s.sweep_mass_kg = r.num_list(sw, "sweep", "robot_mass_kg");

  if (!r.problems.empty()) throw ConfigError(std::move(r.problems));
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  return scenario_from_json(load_config_file(path));
}

}  // namespace hopper
