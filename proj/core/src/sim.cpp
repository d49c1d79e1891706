#include "hopper/sim.hpp"

#include <cmath>

namespace hopper {

void SimConfig::validate() const {
  if (!(dt_s > 0)) throw std::invalid_argument("SimConfig: dt_s must be > 0");
  if (!(event_time_tol_s > 0))
    throw std::invalid_argument("SimConfig: event tolerance must be > 0");
  if (max_cycles < 1) throw std::invalid_argument("SimConfig: max_cycles must be >= 1");
}

const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::Touchdown: return "touchdown";
    case EventKind::Liftoff: return "liftoff";
    case EventKind::Apex: return "apex";
    case EventKind::ValveTrigger: return "valve_trigger";
    case EventKind::ValveClose: return "valve_close";
    case EventKind::CompressionReversal: return "compression_reversal";
    case EventKind::Fall: return "fall";
  }
  return "?";
}

double World::foot_height() const {
  return foot_position(model, state.q)(1) - config.ground_height_m;
}

double World::attachment_length() const {
  return leg_kinematics(model, state.q).attachment_length;
}

double World::attachment_rate() const {
  return leg_kinematics(model, state.q).dd_dq.dot(state.qdot);
}

double World::pneumatic_force() const {
  const double d = pneu.pump_length(attachment_length());
  const double ddot = attachment_rate();
  const TankState& tk = transient.valve_open ? tank_at_trigger : tank;
  return net_pneumatic_force(pneu, ddot < 0.0 ? tank : tk, transient, d, ddot,
                             transient.valve_open);
}

World make_world(const RobotModel& model, const PneumaticConfig& pneu,
                 const SimConfig& config, const RobotState& initial,
                 const TankState& tank) {
  model.validate();
  pneu.validate();
  config.validate();
  tank.validate();
  World w;
  w.model = model;
  w.pneu = pneu;
  w.config = config;
  w.tank = tank;
  w.tank_at_trigger = tank;
  w.state = initial;
  w.rng = Rng(config.seed ^ 0x5eedf00dull);
  w.alpha_measured = initial.mode == ContactMode::Stance;
  return w;
}

namespace {

Vec2 saturate_motor(const RobotModel& m, const Vec2& tau) {
  const double cap = m.motor_max_torque_nm;
  return {std::clamp(tau(0), -cap, cap), std::clamp(tau(1), -cap, cap)};
}

struct Deriv {
  Vec4 qdot, qddot;
  double ddelta, dddelta;
};

Deriv derivative(const World& w, const RobotState& st, double delta, double delta_dot,
                 const ControlCommand& cmd) {
  const auto kin = leg_kinematics(w.model, st.q);
  const double d = w.pneu.pump_length(kin.attachment_length);
  const double ddot = kin.dd_dq.dot(st.qdot);
  TransientState tr = w.transient;
  tr.delta = delta;
  tr.delta_dot = delta_dot;
  tr.valve_open = w.transient.valve_open;
  const TankState& tank_for_push = w.transient.valve_open ? w.tank_at_trigger : w.tank;
  const double f =
      net_pneumatic_force(w.pneu, ddot < 0.0 ? w.tank : tank_for_push, tr, d, ddot,
                          w.transient.valve_open);

  Deriv out;
  out.qdot = st.qdot;
  const Vec2 tau = saturate_motor(w.model, cmd.tau_motor);
  if (st.mode == ContactMode::Stance) {
    out.qddot = constrained_accel(w.model, st, tau, f).qddot;
  } else {
    out.qddot = aerial_accel(w.model, st, tau, f);
  }
  const double s_v = w.transient.valve_open ? 1.0 : 0.0;
  out.ddelta = delta_dot;
  out.dddelta =
      (s_v - w.pneu.actuator.k2 * delta_dot - w.pneu.actuator.k3 * delta) /
      w.pneu.actuator.k1;
  return out;
}

}  // namespace

World step(const World& w, const ControlCommand& cmd, double dt) {
  const RobotState& s0 = w.state;
  auto eval = [&](const Vec4& q, const Vec4& qd, double de, double dd) {
    RobotState st = s0;
    st.q = q;
    st.qdot = qd;
    return derivative(w, st, de, dd, cmd);
  };

  const Deriv k1 = eval(s0.q, s0.qdot, w.transient.delta, w.transient.delta_dot);
  const Deriv k2 = eval(s0.q + 0.5 * dt * k1.qdot, s0.qdot + 0.5 * dt * k1.qddot,
                        w.transient.delta + 0.5 * dt * k1.ddelta,
                        w.transient.delta_dot + 0.5 * dt * k1.dddelta);
  const Deriv k3 = eval(s0.q + 0.5 * dt * k2.qdot, s0.qdot + 0.5 * dt * k2.qddot,
                        w.transient.delta + 0.5 * dt * k2.ddelta,
                        w.transient.delta_dot + 0.5 * dt * k2.dddelta);
  const Deriv k4 = eval(s0.q + dt * k3.qdot, s0.qdot + dt * k3.qddot,
                        w.transient.delta + dt * k3.ddelta,
                        w.transient.delta_dot + dt * k3.dddelta);

  World out = w;
  out.state.q = s0.q + dt / 6.0 * (k1.qdot + 2 * k2.qdot + 2 * k3.qdot + k4.qdot);
  out.state.qdot =
      s0.qdot + dt / 6.0 * (k1.qddot + 2 * k2.qddot + 2 * k3.qddot + k4.qddot);
  out.transient.delta = w.transient.delta + dt / 6.0 * (k1.ddelta + 2 * k2.ddelta +
                                                        2 * k3.ddelta + k4.ddelta);
  out.transient.delta_dot =
      w.transient.delta_dot +
      dt / 6.0 * (k1.dddelta + 2 * k2.dddelta + 2 * k3.dddelta + k4.dddelta);
  if (w.transient.valve_open) out.transient.time_since_trigger_s += dt;
  out.time_s = w.time_s + dt;

  if (!out.state.q.allFinite() || !out.state.qdot.allFinite() ||
      !std::isfinite(out.transient.delta)) {
    throw SimDivergedError("non-finite state after step", w.state, w.time_s);
  }
  return out;
}

double event_value(const World& w, const ControlCommand& cmd, EventKind kind) {
  switch (kind) {
    case EventKind::Touchdown:
      return w.foot_height();
    case EventKind::Liftoff: {
      const auto kin = leg_kinematics(w.model, w.state.q);
      const double d = w.pneu.pump_length(kin.attachment_length);
      const double ddot = kin.dd_dq.dot(w.state.qdot);
      const TankState& tk = w.transient.valve_open ? w.tank_at_trigger : w.tank;
      const double f = net_pneumatic_force(w.pneu, ddot < 0.0 ? w.tank : tk,
                                           w.transient, d, ddot,
                                           w.transient.valve_open);
      RobotState st = w.state;
      st.mode = ContactMode::Stance;
      return constrained_accel(w.model, st, saturate_motor(w.model, cmd.tau_motor), f)
          .contact_force(1);
    }
    case EventKind::Apex:
      return w.state.qdot(1);
    case EventKind::CompressionReversal:
      return w.attachment_rate();
    default:
      throw std::logic_error("event_value: unsupported event kind");
  }
}

double locate_event(const World& w, const ControlCommand& cmd, EventKind kind,
                    double dt) {
  const double f0 = event_value(w, cmd, kind);
  const double f1 = event_value(step(w, cmd, dt), cmd, kind);
  if (f0 == 0.0) return 0.0;
  if (f0 * f1 > 0.0)
    throw std::runtime_error(std::string("locate_event: no sign change for ") +
                             event_name(kind));
  double lo = 0.0, hi = dt;
  for (int i = 0; i < 60 && (hi - lo) > w.config.event_time_tol_s; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = event_value(step(w, cmd, mid), cmd, kind);
    if (fm == 0.0) return mid;
    if (fm * f0 > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

void log_row(SimTrace& trace, const World& w, const ControlCommand& cmd) {
  TraceRow r;
  r.t = w.time_s;
  r.q = w.state.q;
  r.qdot = w.state.qdot;
  r.tau = cmd.tau_motor;
  r.f_pneu = w.pneumatic_force();
  if (w.state.mode == ContactMode::Stance) {
    r.f_contact = constrained_accel(w.model, w.state, cmd.tau_motor, r.f_pneu)
                      .contact_force;
  }
  r.tank_pa = w.tank.pressure_pa;
  r.delta = w.transient.delta;
  r.mode = w.state.mode == ContactMode::Stance ? 1 : 0;
  r.valve = w.transient.valve_open ? 1 : 0;
  trace.rows.push_back(r);
}

}  // namespace

SimTrace run_cycles(World& w, Controller& controller, int n_cycles) {
  SimTrace trace;
  const double dt = w.config.dt_s;
  CycleSummary cur;
  bool in_cycle = false;

  auto finish_cycle = [&](double t) {
    if (!in_cycle) return;
    cur.tank_pa_end = w.tank.pressure_pa;
    cur.min_attachment_m = w.stance_min_attachment;
    trace.cycles.push_back(cur);
    in_cycle = false;
    (void)t;
  };

  try {
    while (w.time_s < w.config.max_time_s && w.cycle < w.config.max_cycles) {

      // measured contact with the optional sensor-noise shim
      bool alpha = w.state.mode == ContactMode::Stance;
      if (w.config.contact_flip_probability > 0.0 &&
          w.rng.uniform01() < w.config.contact_flip_probability)
        alpha = !alpha;
      w.alpha_measured = alpha;

      ControlCommand cmd = controller.command(w);
      cmd.tau_motor = saturate_motor(w.model, cmd.tau_motor);

      // valve edges
      if (cmd.valve_open && !w.transient.valve_open) {
        w.transient.valve_open = true;
        w.transient.time_since_trigger_s = 0.0;
        w.tank_at_trigger = w.tank;
        trace.events.push_back(
            {EventKind::ValveTrigger, w.time_s, w.cycle, w.tank.pressure_pa});
      } else if (!cmd.valve_open && w.transient.valve_open) {
        const double e = w.pneu.actuator_extension(
            w.pneu.pump_length(w.attachment_length()));
        w.tank = tank_release_update(w.pneu.actuator, w.tank_at_trigger, e);
        w.transient.valve_open = false;
        trace.events.push_back(
            {EventKind::ValveClose, w.time_s, w.cycle, w.tank.pressure_pa});
      }

      World next = step(w, cmd, dt);

      if (w.state.mode == ContactMode::Aerial) {
        // touchdown
        if (event_value(w, cmd, EventKind::Touchdown) > 0 &&
            event_value(next, cmd, EventKind::Touchdown) <= 0) {
          if (w.cycle >= n_cycles) break;  // run ends falling onto the next cycle
          const double tau = locate_event(w, cmd, EventKind::Touchdown, dt);
          World at = tau > 0 ? step(w, cmd, tau) : w;
          const double ke_pre = kinetic_energy(at.model, at.state);
          const ImpactResult imp = impact_map(at.model, at.state);
          at.state.qdot = imp.qdot_post;
          at.state.mode = ContactMode::Stance;
          const double ke_post = kinetic_energy(at.model, at.state);
          at.cycle = w.cycle + 1;
          at.stance_min_attachment = at.attachment_length();
          at.tank_updated_this_stance = false;
          finish_cycle(at.time_s);
          cur = CycleSummary{};
          cur.cycle = at.cycle;
          cur.touchdown_t = at.time_s;
          cur.tank_pa_start = at.tank.pressure_pa;
          cur.impact_loss_j = ke_pre - ke_post;
          in_cycle = true;
          trace.events.push_back(
              {EventKind::Touchdown, at.time_s, at.cycle, ke_pre - ke_post});
          w = at;
          log_row(trace, w, cmd);
          continue;
        }
        // apex
        if (w.state.qdot(1) > 0 && next.state.qdot(1) <= 0) {
          const double tau = locate_event(w, cmd, EventKind::Apex, dt);
          World at = tau > 0 ? step(w, cmd, tau) : w;
          at.prev_apex_xdot = at.last_apex_xdot;
          at.last_apex_xdot = at.state.qdot(0);
          trace.events.push_back({EventKind::Apex, at.time_s, at.cycle, at.state.q(1)});
          if (in_cycle) {
            cur.apex_z = at.state.q(1);
            cur.apex_height = at.state.q(1) - w.config.ground_height_m -
                              w.model.leg_length_max_m;
          }
          w = at;
          log_row(trace, w, cmd);
          continue;
        }
      } else {
        // compression reversal: apply the stroke's tank update once
        const double rate0 = w.attachment_rate();
        const double rate1 = next.attachment_rate();
        w.stance_min_attachment =
            std::min(w.stance_min_attachment, next.attachment_length());
        if (!w.tank_updated_this_stance && rate0 < 0 && rate1 >= 0) {
          const double tau = locate_event(w, cmd, EventKind::CompressionReversal, dt);
          World at = tau > 0 ? step(w, cmd, tau) : w;
          at.stance_min_attachment =
              std::min(w.stance_min_attachment, at.attachment_length());
          const double x_deep =
              at.pneu.pump.stroke_m - at.pneu.pump_length(at.stance_min_attachment);
          at.tank = pump_stroke_tank_update(at.pneu.pump, at.tank, x_deep);
          at.tank_updated_this_stance = true;
          trace.events.push_back({EventKind::CompressionReversal, at.time_s, at.cycle,
                                  at.tank.pressure_pa});
          w = at;
          log_row(trace, w, cmd);
          continue;
        }
        // liftoff: vertical contact force crosses zero downward
        const double fz0 = event_value(w, cmd, EventKind::Liftoff);
        const double fz1 = event_value(next, cmd, EventKind::Liftoff);
        if (fz0 > 0 && fz1 <= 0) {
          const double tau = locate_event(w, cmd, EventKind::Liftoff, dt);
          World at = tau > 0 ? step(w, cmd, tau) : w;
          at.state.mode = ContactMode::Aerial;
          if (in_cycle) cur.liftoff_t = at.time_s;
          trace.events.push_back({EventKind::Liftoff, at.time_s, at.cycle,
                                  at.state.qdot(1)});
          w = at;
          log_row(trace, w, cmd);
          continue;
        }
      }

      w = next;
      log_row(trace, w, cmd);

      if (w.state.q(1) - w.config.ground_height_m < w.config.fall_z_m) {
        trace.events.push_back({EventKind::Fall, w.time_s, w.cycle, w.state.q(1)});
        trace.fell = true;
        break;
      }
    }
    finish_cycle(w.time_s);
  } catch (const SimDivergedError& e) {
    trace.diverged = true;
    trace.message = e.what();
    finish_cycle(w.time_s);
  }
  return trace;
}

}  // namespace hopper
