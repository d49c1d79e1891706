#include "hopper/point_mass.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hopper {

double MotorEnvelope::upper(double v) const {
  if (v <= 0.0) return f_max_n;  // braking / pushing against compression
  if (v_nom_mps <= 0.0 || !std::isfinite(v_nom_mps)) return f_max_n;
  // saturating stall/no-load line, rounded at the corner like the planner's
  constexpr double eps = 0.02;
  const double u = 1.0 - v / v_nom_mps;
  const double eta = 0.5 * (u + std::sqrt(u * u + eps * eps));
  return f_max_n * std::min(1.0, eta);
}

double MotorEnvelope::lower(double v) const {
  if (!allow_pull) return 0.0;
  if (v >= 0.0) return -f_max_n;
  if (v_nom_mps <= 0.0 || !std::isfinite(v_nom_mps)) return -f_max_n;
  return -f_max_n * std::clamp(1.0 - (-v) / v_nom_mps, 0.0, 1.0);
}

void PointMassConfig::validate() const {
  if (!(mass_kg > 0)) throw std::invalid_argument("PointMassConfig: mass must be > 0");
  if (!(leg_min_m > 0 && leg_min_m < leg_max_m))
    throw std::invalid_argument("PointMassConfig: require 0 < leg_min < leg_max");
  if (!(dt_s > 0)) throw std::invalid_argument("PointMassConfig: dt must be > 0");
  pneu.validate();
}

double net_pump_force_at(const PneumaticConfig& pneu, double tank_pa,
                         double tank_volume_m3, double leg_m) {
  TankState tank;
  tank.pressure_pa = tank_pa;
  tank.volume_m3 = tank_volume_m3;
  TransientState tr;
  return net_pneumatic_force(pneu, tank, tr, pneu.pump_length(leg_m), -1.0, false);
}

double net_actuator_force_at(const PneumaticConfig& pneu, double tank_pa,
                             double tank_volume_m3, double leg_m, double delta) {
  TankState tank;
  tank.pressure_pa = tank_pa;
  tank.volume_m3 = tank_volume_m3;
  TransientState tr;
  tr.delta = delta;
  return net_pneumatic_force(pneu, tank, tr, pneu.pump_length(leg_m), 1.0, true);
}

PointWorld make_point_world(const PointMassConfig& cfg, const TankState& tank,
                            double apex_z_m) {
  cfg.validate();
  tank.validate();
  if (apex_z_m < cfg.leg_max_m)
    throw std::invalid_argument("make_point_world: apex below standing height");
  PointWorld w;
  w.cfg = cfg;
  w.tank = tank;
  w.tank_at_trigger = tank;
  w.z = apex_z_m;
  w.v = 0.0;
  w.phase = PointPhase::Aerial;
  return w;
}

namespace {

double pneumatic_force(const PointWorld& w, double z, double v) {
  const double d = w.cfg.pneu.pump_length(z);
  const TankState& tk = w.transient.valve_open ? w.tank_at_trigger : w.tank;
  return net_pneumatic_force(w.cfg.pneu, v < 0.0 ? w.tank : tk, w.transient, d, v,
                             w.transient.valve_open);
}

// RK4 on (z, v, delta, delta_dot) during stance with the command held.
void stance_rk4(PointWorld& w, double f_motor, double dt) {
  const double m = w.cfg.mass_kg, g = w.cfg.gravity;
  const double k1i = 1.0 / w.cfg.pneu.actuator.k1;
  const double k2 = w.cfg.pneu.actuator.k2, k3 = w.cfg.pneu.actuator.k3;
  const double sv = w.transient.valve_open ? 1.0 : 0.0;

  struct S { double z, v, de, dd; };
  auto f = [&](const S& s) {
    PointWorld tmp = w;
    tmp.transient.delta = s.de;
    tmp.transient.delta_dot = s.dd;
    const double a = (pneumatic_force(tmp, s.z, s.v) + f_motor) / m - g;
    return S{s.v, a, s.dd, (sv - k2 * s.dd - k3 * s.de) * k1i};
  };
  const S s0{w.z, w.v, w.transient.delta, w.transient.delta_dot};
  const S a = f(s0);
  const S b = f({s0.z + 0.5 * dt * a.z, s0.v + 0.5 * dt * a.v,
                 s0.de + 0.5 * dt * a.de, s0.dd + 0.5 * dt * a.dd});
  const S c = f({s0.z + 0.5 * dt * b.z, s0.v + 0.5 * dt * b.v,
                 s0.de + 0.5 * dt * b.de, s0.dd + 0.5 * dt * b.dd});
  const S d = f({s0.z + dt * c.z, s0.v + dt * c.v, s0.de + dt * c.de,
                 s0.dd + dt * c.dd});
  w.z = s0.z + dt / 6.0 * (a.z + 2 * b.z + 2 * c.z + d.z);
  w.v = s0.v + dt / 6.0 * (a.v + 2 * b.v + 2 * c.v + d.v);
  w.transient.delta = s0.de + dt / 6.0 * (a.de + 2 * b.de + 2 * c.de + d.de);
  w.transient.delta_dot = s0.dd + dt / 6.0 * (a.dd + 2 * b.dd + 2 * c.dd + d.dd);
  if (w.transient.valve_open) w.transient.time_since_trigger_s += dt;
  w.t += dt;
}

void log_row(PointTrace& tr, const PointWorld& w, double f_motor) {
  PointTraceRow r;
  r.t = w.t;
  r.z = w.z;
  r.v = w.v;
  r.f_motor = f_motor;
  r.f_pneu = w.phase == PointPhase::Aerial ? 0.0 : pneumatic_force(w, w.z, w.v);
  r.tank_pa = w.tank.pressure_pa;
  r.delta = w.transient.delta;
  r.phase = static_cast<int>(w.phase);
  r.valve = w.transient.valve_open ? 1 : 0;
  tr.rows.push_back(r);
}

}  // namespace

PointTrace run_point_cycles(PointWorld& w, PointController& controller, int n_cycles) {
  PointTrace trace;
  const double dt = w.cfg.dt_s;
  const double g = w.cfg.gravity;
  PointCycle cur;
  bool in_cycle = false;
  int settled_guard = 0;

  auto close_valve_if_open = [&](PointWorld& ww) {
    if (!ww.transient.valve_open) return;
    const double e = ww.cfg.pneu.actuator_extension(ww.cfg.pneu.pump_length(ww.z));
    ww.tank = tank_release_update(ww.cfg.pneu.actuator, ww.tank_at_trigger, e);
    ww.transient.valve_open = false;
    if (in_cycle) cur.released = true;
  };

  while (w.t < w.cfg.max_time_s) {
    if (!std::isfinite(w.z) || !std::isfinite(w.v)) {
      trace.diverged = true;
      trace.message = "non-finite point-mass state";
      break;
    }

    if (w.phase == PointPhase::Aerial) {
      // Exact ballistic flight to the next event (apex or touchdown).
      if (w.v <= 0.0 && w.z <= w.cfg.leg_max_m + 1e-12) {
        // touchdown
        if (w.cycle >= n_cycles) break;
        w.phase = PointPhase::Descent;
        w.cycle += 1;
        w.stance_min_z = w.z;
        w.tank_updated_this_stance = false;
        if (in_cycle) trace.cycles.push_back(cur);
        cur = PointCycle{};
        cur.cycle = w.cycle;
        cur.touchdown_t = w.t;
        cur.tank_pa_start = w.tank.pressure_pa;
        cur.min_leg_m = w.z;
        in_cycle = true;
        controller.on_touchdown(w);
        continue;
      }
      const double dt_td =
          (w.v + std::sqrt(std::max(0.0, w.v * w.v + 2.0 * g * (w.z - w.cfg.leg_max_m)))) / g;
      if (w.v > 0.0) {
        const double dt_apex = w.v / g;
        if (dt_apex <= dt) {  // land exactly on the apex
          w.z += w.v * dt_apex - 0.5 * g * dt_apex * dt_apex;
          w.v = 0.0;
          w.t += dt_apex;
          if (in_cycle) cur.apex_height_m = w.z - w.cfg.leg_max_m;
          log_row(trace, w, 0.0);
          continue;
        }
      }
      if (dt_td <= dt) {
        w.z = w.cfg.leg_max_m;
        w.v -= g * dt_td;
        w.t += dt_td;
        log_row(trace, w, 0.0);
        continue;
      }
      w.z += w.v * dt - 0.5 * g * dt * dt;
      w.v -= g * dt;
      w.t += dt;
      log_row(trace, w, 0.0);
      continue;
    }

    // stance
    PointCommand cmd = controller.command(w);
    cmd.f_motor = std::clamp(cmd.f_motor, w.cfg.motor.lower(w.v), w.cfg.motor.upper(w.v));

    if (cmd.valve_open && !w.transient.valve_open) {
      w.transient.valve_open = true;
      w.tank_at_trigger = w.tank;
      w.transient.time_since_trigger_s = cmd.trigger_lead_s;
      w.transient.delta = transient_step_response(w.cfg.pneu.actuator, cmd.trigger_lead_s);
      w.transient.delta_dot =
          transient_step_response_rate(w.cfg.pneu.actuator, cmd.trigger_lead_s);
    } else if (!cmd.valve_open && w.transient.valve_open) {
      close_valve_if_open(w);
    }

    PointWorld next = w;
    stance_rk4(next, cmd.f_motor, dt);
    next.stance_min_z = std::min(next.stance_min_z, next.z);

    if (w.phase == PointPhase::Descent) {
      // joint-limit stop
      if (next.z <= w.cfg.leg_min_m) {
        // bisect the crossing time for a clean stop
        double lo = 0, hi = dt;
        for (int i = 0; i < 50; ++i) {
          PointWorld probe = w;
          stance_rk4(probe, cmd.f_motor, 0.5 * (lo + hi));
          if (probe.z > w.cfg.leg_min_m) lo = 0.5 * (lo + hi); else hi = 0.5 * (lo + hi);
        }
        PointWorld at = w;
        if (lo > 0) stance_rk4(at, cmd.f_motor, lo);
        const double loss = 0.5 * w.cfg.mass_kg * at.v * at.v;
        at.z = w.cfg.leg_min_m;
        at.v = 0.0;
        at.stance_min_z = w.cfg.leg_min_m;
        if (in_cycle) cur.joint_stop_loss_j += loss;
        w = at;
        log_row(trace, w, cmd.f_motor);
        // fall through to the reversal handling below on the next iteration
      } else {
        w = next;
        log_row(trace, w, cmd.f_motor);
      }
      if (w.v >= 0.0) {
        // compression -> extension turning point: pump stroke tank update
        if (!w.tank_updated_this_stance) {
          const double x_deep =
              w.cfg.pneu.pump.stroke_m - w.cfg.pneu.pump_length(w.stance_min_z);
          w.tank = pump_stroke_tank_update(w.cfg.pneu.pump, w.tank, x_deep);
          w.tank_updated_this_stance = true;
        }
        if (in_cycle) cur.min_leg_m = w.stance_min_z;
        w.phase = PointPhase::Ascent;
      }
      continue;
    }

    // ascent
    if (next.z >= w.cfg.leg_max_m) {
      // bisect liftoff (z crosses leg_max going up)
      double lo = 0, hi = dt;
      for (int i = 0; i < 50; ++i) {
        PointWorld probe = w;
        stance_rk4(probe, cmd.f_motor, 0.5 * (lo + hi));
        if (probe.z < w.cfg.leg_max_m) lo = 0.5 * (lo + hi); else hi = 0.5 * (lo + hi);
      }
      PointWorld at = w;
      if (lo > 0) stance_rk4(at, cmd.f_motor, lo);
      at.z = w.cfg.leg_max_m;
      close_valve_if_open(at);
      at.phase = PointPhase::Aerial;
      if (in_cycle) {
        cur.liftoff_t = at.t;
        cur.v_liftoff = at.v;
        cur.ke_liftoff_j = 0.5 * at.cfg.mass_kg * at.v * at.v;
        cur.tank_pa_end = at.tank.pressure_pa;
      }
      w = at;
      log_row(trace, w, cmd.f_motor);
      // settled? (no meaningful hop)
      if (w.v * w.v / (2.0 * g) < 1e-5) {
        if (++settled_guard >= 3) {
          trace.message = "settled";
          break;
        }
      } else {
        settled_guard = 0;
      }
      continue;
    }
    if (next.v <= 0.0 && next.z < w.cfg.leg_max_m - 1e-9 && w.v > 0) {
      // The push could not reach liftoff and the mass is descending again
      // (possible at very low pressures with a weak profile): drop back to
      // the descent branch so the pump physics stays consistent.
      close_valve_if_open(next);
      next.phase = PointPhase::Descent;
      next.tank_updated_this_stance = true;  // one update per stance
      w = next;
      log_row(trace, w, cmd.f_motor);
      if (++settled_guard > 200) {
        trace.message = "settled in stance";
        break;
      }
      continue;
    }
    w = next;
    log_row(trace, w, cmd.f_motor);
  }

  if (in_cycle) trace.cycles.push_back(cur);
  return trace;
}

double PhaseProfile::eval(double L) const {
  if (leg_m.empty()) return 0.0;
  const bool inc = leg_m.back() >= leg_m.front();
  // clamped linear interpolation over a monotone grid
  auto lo_hi = [&](double x) -> double {
    if (inc) {
      if (x <= leg_m.front()) return force_n.front();
      if (x >= leg_m.back()) return force_n.back();
      auto it = std::upper_bound(leg_m.begin(), leg_m.end(), x);
      const size_t i = static_cast<size_t>(it - leg_m.begin());
      const double t = (x - leg_m[i - 1]) / (leg_m[i] - leg_m[i - 1]);
      return force_n[i - 1] + t * (force_n[i] - force_n[i - 1]);
    }
    if (x >= leg_m.front()) return force_n.front();
    if (x <= leg_m.back()) return force_n.back();
    auto it = std::upper_bound(leg_m.begin(), leg_m.end(), x,
                               [](double a, double b) { return a > b; });
    const size_t i = static_cast<size_t>(it - leg_m.begin());
    const double t = (x - leg_m[i - 1]) / (leg_m[i] - leg_m[i - 1]);
    return force_n[i - 1] + t * (force_n[i] - force_n[i - 1]);
  };
  return lo_hi(L);
}

PlanReplayController::PlanReplayController(const PointMassConfig& cfg, Options opt)
    : cfg_(cfg), opt_(std::move(opt)) {}

void PlanReplayController::on_touchdown(const PointWorld& w) {
  cycle_tank_pa_ = w.tank.pressure_pa;
  release_this_cycle_ = false;
  if (!opt_.release_enabled || releases_done_ >= opt_.max_releases) return;
  if (opt_.release_cycle > 0) {
    release_this_cycle_ = (w.cycle >= opt_.release_cycle);
  } else {
    release_this_cycle_ = (cycle_tank_pa_ >= opt_.release_pressure_pa);
  }
}

PointCommand PlanReplayController::command(const PointWorld& w) {
  PointCommand cmd;
  if (w.phase == PointPhase::Descent) {
    double f = opt_.descent.eval(w.z);
    // feedforward pump compensation: F* + F_pump*(plan) - F_pump(now)
    f += net_pump_force_at(cfg_.pneu, opt_.plan_tank_pa, w.tank.volume_m3, w.z) -
         net_pump_force_at(cfg_.pneu, cycle_tank_pa_, w.tank.volume_m3, w.z);
    cmd.f_motor = std::clamp(f, cfg_.motor.lower(w.v), cfg_.motor.upper(w.v));
    cmd.valve_open = false;
    return cmd;
  }
  if (w.phase == PointPhase::Ascent) {
    if (release_this_cycle_) {
      cmd.valve_open = true;
      cmd.trigger_lead_s = opt_.trigger_lead_s;
      cmd.f_motor = cfg_.motor.upper(w.v);  // full push alongside the release
      if (!w.transient.valve_open) releases_done_ += 1;
    } else {
      cmd.valve_open = false;
      cmd.f_motor = opt_.greedy_ascent ? cfg_.motor.upper(w.v)
                                       : std::clamp(opt_.ascent.eval(w.z),
                                                    cfg_.motor.lower(w.v),
                                                    cfg_.motor.upper(w.v));
    }
    return cmd;
  }
  return cmd;
}

}  // namespace hopper
