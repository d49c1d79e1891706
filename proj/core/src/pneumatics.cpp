#include "hopper/pneumatics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hopper {

namespace {

void throw_domain(const char* what) { throw std::domain_error(what); }

}  // namespace

PumpGeometry PumpGeometry::single_area(double area_m2, double stroke_m) {
  PumpGeometry g;
  g.stage1_area_m2 = area_m2;
  g.stage2_area_m2 = area_m2;
  g.stroke_m = stroke_m;
  g.stage1_end_m = 0.5 * stroke_m;
  g.stage2_start_m = 0.5 * stroke_m;
  g.initial_volume_m3 = area_m2 * stroke_m;
  return g;
}

double PumpGeometry::area_at(double x) const {
  if (x < stage1_end_m) return stage1_area_m2;
  if (x >= stage2_start_m) return stage2_area_m2;
  // smoothstep across the transition so the force field stays C1
  const double u = (x - stage1_end_m) / (stage2_start_m - stage1_end_m);
  const double s = u * u * (3.0 - 2.0 * u);
  return stage1_area_m2 + s * (stage2_area_m2 - stage1_area_m2);
}

double PumpGeometry::chamber_volume(double x) const {
  const double l1 = stage1_end_m;
  const double l2 = stage2_start_m;
  const double A1 = stage1_area_m2;
  const double A2 = stage2_area_m2;
  const double w = l2 - l1;

  // integral of the smoothstep blend from l1 to l1 + u*w
  auto blend_int = [&](double u) {
    return A1 * u * w + (A2 - A1) * w * (u * u * u - 0.5 * u * u * u * u);
  };
  double v = 0.0;
  const double xe = std::clamp(x, 0.0, stroke_m);
  if (xe < l1) v += A1 * (l1 - xe);
  if (xe < l2 && w > 0.0) {
    const double u0 = std::clamp((xe - l1) / w, 0.0, 1.0);
    v += blend_int(1.0) - blend_int(u0);
  }
  const double a2 = std::max(xe, l2);
  if (a2 < stroke_m) v += A2 * (stroke_m - a2);
  return v;
}

double PumpGeometry::initial_volume() const {
  if (initial_volume_m3 > 0.0) return initial_volume_m3;
  return chamber_volume(0.0);
}

void PumpGeometry::validate() const {
  std::ostringstream bad;
  if (!(stage1_area_m2 > 0)) bad << "stage1_area_m2 must be > 0; ";
  if (!(stage2_area_m2 > 0)) bad << "stage2_area_m2 must be > 0; ";
  if (!(stroke_m > 0)) bad << "stroke_m must be > 0; ";
  if (!(stage1_end_m > 0 && stage1_end_m <= stage2_start_m && stage2_start_m < stroke_m))
    bad << "require 0 < stage1_end <= stage2_start < stroke; ";
  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("PumpGeometry: " + msg);
}

void TankState::validate() const {
  std::ostringstream bad;
  if (!(pressure_pa >= atmospheric_pa)) bad << "pressure below atmospheric; ";
  if (!(volume_m3 > 0)) bad << "volume must be > 0; ";
  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("TankState: " + msg);
}

void ActuatorModel::validate() const {
  std::ostringstream bad;
  if (!(bore_area_m2 > 0)) bad << "bore_area_m2 must be > 0; ";
  if (!(stroke_m > 0)) bad << "stroke_m must be > 0; ";
  // Routh: k1 s^2 + k2 s + k3 is Hurwitz iff all coefficients positive.
  if (!(k1 > 0 && k2 > 0 && k3 > 0)) bad << "transient coefficients must be positive (stability); ";
  const std::string msg = bad.str();
  if (!msg.empty()) throw std::invalid_argument("ActuatorModel: " + msg);
}

double theoretical_closed_force(const PumpGeometry& geom, const TankState& tank,
                                double d) {
  if (!(d > 0.0)) throw_domain("theoretical_closed_force: remaining length must be > 0");
  if (d > geom.stroke_m) throw_domain("theoretical_closed_force: remaining length exceeds stroke");
  const double x = geom.stroke_m - d;
  const double p = tank.atmospheric_pa * geom.initial_volume() / geom.chamber_volume(x);
  return p * geom.area_at(x);
}

double critical_compression(const PumpGeometry& geom, const TankState& tank) {
  if (!(tank.pressure_pa >= tank.atmospheric_pa))
    throw_domain("critical_compression: tank below atmospheric");
  const double v0 = geom.initial_volume();
  const double vc = tank.atmospheric_pa * v0 / tank.pressure_pa;  // critical chamber volume
  if (vc >= v0) return geom.stroke_m;

  // Invert the piecewise chamber volume: find x with V(x) = vc, return d = stroke - x.
  const double l1 = geom.stage1_end_m;
  const double l2 = geom.stage2_start_m;
  const double v_l2 = geom.chamber_volume(l2);
  if (vc <= v_l2) {
    // stage-2 region: V(x) = A2 * (stroke - x)
    return vc / geom.stage2_area_m2;
  }
  const double v_l1 = geom.chamber_volume(l1);
  if (vc <= v_l1 && l2 > l1) {
    // transition: bisect (V is strictly decreasing)
    double lo = l1, hi = l2;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (geom.chamber_volume(mid) > vc) lo = mid; else hi = mid;
      if (hi - lo < 1e-15) break;
    }
    return geom.stroke_m - 0.5 * (lo + hi);
  }
  // stage-1 region: V(x) = V0 - A1 * x
  const double x = (v0 - vc) / geom.stage1_area_m2;
  return geom.stroke_m - x;
}

double theoretical_open_force(const PumpGeometry& geom, const TankState& tank,
                              double d) {
  if (d < 0.0) throw_domain("theoretical_open_force: negative remaining length");
  const double d_c = critical_compression(geom, tank);
  if (d > d_c * (1.0 + 1e-12))
    throw_domain("theoretical_open_force: valve still closed at this length");
  const double x = geom.stroke_m - d;
  const double v0 = geom.initial_volume();
  const double vc = tank.atmospheric_pa * v0 / tank.pressure_pa;
  const double p = tank.pressure_pa * (tank.volume_m3 + vc) /
                   (tank.volume_m3 + geom.chamber_volume(x));
  return p * geom.area_at(x);
}

double theoretical_pump_force(const PumpGeometry& geom, const TankState& tank,
                              double x) {
  const double d = geom.stroke_m - x;
  const double d_c = critical_compression(geom, tank);
  if (d > d_c) return theoretical_closed_force(geom, tank, d);
  return theoretical_open_force(geom, tank, d);
}

namespace {

// raw closed/open branch forces and x-slopes without domain guards
struct RawBranch {
  double f = 0, dfdx = 0;
};

double area_slope(const PumpGeometry& g, double x) {
  if (x < g.stage1_end_m || x >= g.stage2_start_m ||
      g.stage2_start_m <= g.stage1_end_m)
    return 0.0;
  const double w = g.stage2_start_m - g.stage1_end_m;
  const double u = (x - g.stage1_end_m) / w;
  return (g.stage2_area_m2 - g.stage1_area_m2) * 6.0 * u * (1.0 - u) / w;
}

RawBranch raw_closed(const PumpGeometry& g, const TankState& tank, double x) {
  const double p0 = tank.atmospheric_pa;
  const double v0 = g.initial_volume();
  const double v = g.chamber_volume(x);
  const double a = g.area_at(x);
  const double ap = area_slope(g, x);
  RawBranch out;
  out.f = p0 * v0 * a / v;
  out.dfdx = p0 * v0 * (ap * v + a * a) / (v * v);
  return out;
}

RawBranch raw_open(const PumpGeometry& g, const TankState& tank, double x) {
  const double p0 = tank.atmospheric_pa;
  const double v0 = g.initial_volume();
  const double vc = p0 * v0 / tank.pressure_pa;
  const double K = tank.pressure_pa * (tank.volume_m3 + vc);
  const double v = g.chamber_volume(x);
  const double a = g.area_at(x);
  const double ap = area_slope(g, x);
  const double den = tank.volume_m3 + v;
  RawBranch out;
  out.f = K * a / den;
  out.dfdx = K * (ap * den + a * a) / (den * den);
  return out;
}

constexpr double kValveBlendX = 7.5e-4;  // half-width of the branch blend

}  // namespace

ForceSlope net_theoretical_pump(const PumpGeometry& geom, const TankState& tank,
                                double x) {
  const double p0 = tank.atmospheric_pa;
  const double d_c = critical_compression(geom, tank);
  const double x_c = geom.stroke_m - d_c;
  const double a = geom.area_at(x);
  const double ap = area_slope(geom, x);

  RawBranch raw;
  if (x <= x_c - kValveBlendX) {
    raw = raw_closed(geom, tank, x);
  } else if (x >= x_c + kValveBlendX) {
    raw = raw_open(geom, tank, x);
  } else {
    const RawBranch c = raw_closed(geom, tank, x);
    const RawBranch o = raw_open(geom, tank, x);
    const double u = (x - (x_c - kValveBlendX)) / (2.0 * kValveBlendX);
    const double s = u * u * (3.0 - 2.0 * u);
    const double sp = 6.0 * u * (1.0 - u) / (2.0 * kValveBlendX);
    raw.f = (1.0 - s) * c.f + s * o.f;
    raw.dfdx = (1.0 - s) * c.dfdx + s * o.dfdx + sp * (o.f - c.f);
  }
  ForceSlope out;
  out.f = raw.f - p0 * a;
  out.dfdx = raw.dfdx - p0 * ap;
  if (out.f <= 0.0) return {0.0, 0.0};
  return out;
}

ForceSlope net_actuator_push(const ActuatorModel& act, const TankState& tank,
                             double e) {
  const double A = act.bore_area_m2;
  const double den = tank.volume_m3 + A * e;
  const double gauge = A * tank.pressure_pa * tank.volume_m3 / den -
                       tank.atmospheric_pa * A;
  if (gauge <= 0.0) return {0.0, 0.0};
  const double dgauge = -A * A * tank.pressure_pa * tank.volume_m3 / (den * den);
  const double u = std::clamp((act.stroke_m - e) / kStrokeTaperM, 0.0, 1.0);
  const double taper = u * u * (3.0 - 2.0 * u);
  const double dtaper = (u > 0.0 && u < 1.0) ? -6.0 * u * (1.0 - u) / kStrokeTaperM
                                             : 0.0;
  ForceSlope out;
  out.f = gauge * taper;
  out.dfdx = dgauge * taper + gauge * dtaper;
  return out;
}

double fitted_closed_branch(const PumpFitCoefficients& fit, double x) {
  return x * x * fit.c1 + x * fit.c2 + fit.c3;
}

double fitted_pump_force(const PumpFitCoefficients& fit, const PumpGeometry& geom,
                         const TankState& tank, double x, double length_rate_mps) {
  if (x < 0.0 || x > geom.stroke_m)
    throw_domain("fitted_pump_force: compression outside [0, stroke]");
  if (length_rate_mps >= 0.0) return 0.0;  // extension: only trivial friction

  const double d = geom.stroke_m - x;
  const double d_c = critical_compression(geom, tank);
  if (d <= d_c) {
    const double x_c = geom.stroke_m - d_c;
    double scale;
    if (x_c < geom.stage1_end_m) scale = fit.m1 * x_c + fit.b1;
    else if (x_c < geom.stage2_start_m) scale = fit.m2 * x_c + fit.b2;
    else scale = fitted_closed_branch(fit, x_c);
    return scale * (fit.c4 * x * x + fit.c5 * x + fit.c6);
  }
  if (x < geom.stage1_end_m) return fit.m1 * x + fit.b1;
  if (x < geom.stage2_start_m) return fit.m2 * x + fit.b2;
  return fitted_closed_branch(fit, x);
}

TankState pump_stroke_tank_update(const PumpGeometry& geom, const TankState& tank,
                                  double x_deepest) {
  const double d_reached = geom.stroke_m - std::clamp(x_deepest, 0.0, geom.stroke_m);
  const double d_c = critical_compression(geom, tank);
  if (d_reached >= d_c) return tank;  // valve never opened

  const double v0 = geom.initial_volume();
  const double vc = tank.atmospheric_pa * v0 / tank.pressure_pa;
  TankState out = tank;
  out.pressure_pa = tank.pressure_pa * (tank.volume_m3 + vc) /
                    (tank.volume_m3 + geom.chamber_volume(geom.stroke_m - d_reached));
  return out;
}

TankState tank_release_update(const ActuatorModel& act, const TankState& tank,
                              double extension_at_close_m) {
  const double e = std::clamp(extension_at_close_m, 0.0, act.stroke_m);
  TankState out = tank;
  out.pressure_pa = std::max(
      tank.atmospheric_pa,
      tank.pressure_pa * tank.volume_m3 / (tank.volume_m3 + act.bore_area_m2 * e));
  return out;
}

double static_actuator_force(const ActuatorModel& act, const TankState& tank,
                             double e) {
  if (e < 0.0 || e > act.stroke_m)
    throw_domain("static_actuator_force: extension outside [0, stroke]");
  return act.bore_area_m2 * tank.pressure_pa * tank.volume_m3 /
         (tank.volume_m3 + act.bore_area_m2 * e);
}

TransientState step_transient(const TransientState& state, const ActuatorModel& act,
                              double dt_s) {
  if (!(dt_s > 0.0)) throw_domain("step_transient: dt must be > 0");
  const double s_v = state.valve_open ? 1.0 : 0.0;
  const double inv_k1 = 1.0 / act.k1;
  auto f = [&](double delta, double delta_dot, double& dd, double& ddd) {
    dd = delta_dot;
    ddd = (s_v - act.k2 * delta_dot - act.k3 * delta) * inv_k1;
  };
  double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
  const double d = state.delta, v = state.delta_dot, h = dt_s;
  f(d, v, k1a, k1b);
  f(d + 0.5 * h * k1a, v + 0.5 * h * k1b, k2a, k2b);
  f(d + 0.5 * h * k2a, v + 0.5 * h * k2b, k3a, k3b);
  f(d + h * k3a, v + h * k3b, k4a, k4b);

  TransientState out = state;
  out.delta = d + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
  out.delta_dot = v + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
  if (state.valve_open) out.time_since_trigger_s += dt_s;
  return out;
}

double transient_step_response(const ActuatorModel& act, double t) {
  if (t <= 0.0) return 0.0;
  const double a = act.k1, b = act.k2, c = act.k3;
  const double ss = 1.0 / c;
  const double disc = b * b - 4.0 * a * c;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double r1 = (-b + sq) / (2.0 * a);
    const double r2 = (-b - sq) / (2.0 * a);
    return ss * (1.0 - (r2 * std::exp(r1 * t) - r1 * std::exp(r2 * t)) / (r2 - r1));
  }
  if (disc == 0.0) {
    const double r = -b / (2.0 * a);
    return ss * (1.0 - (1.0 - r * t) * std::exp(r * t));
  }
  const double wn = std::sqrt(c / a);
  const double zeta = b / (2.0 * std::sqrt(a * c));
  const double wd = wn * std::sqrt(1.0 - zeta * zeta);
  const double phi = std::atan2(zeta, std::sqrt(1.0 - zeta * zeta));
  return ss * (1.0 - std::exp(-zeta * wn * t) / std::sqrt(1.0 - zeta * zeta) *
                         std::cos(wd * t - phi));
}

double transient_step_response_rate(const ActuatorModel& act, double t) {
  if (t <= 0.0) return 0.0;
  const double a = act.k1, b = act.k2, c = act.k3;
  const double ss = 1.0 / c;
  const double disc = b * b - 4.0 * a * c;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double r1 = (-b + sq) / (2.0 * a);
    const double r2 = (-b - sq) / (2.0 * a);
    return ss * r1 * r2 * (std::exp(r2 * t) - std::exp(r1 * t)) / (r2 - r1);
  }
  if (disc == 0.0) {
    const double r = -b / (2.0 * a);
    return ss * r * r * t * std::exp(r * t);
  }
  const double wn = std::sqrt(c / a);
  const double zeta = b / (2.0 * std::sqrt(a * c));
  const double wd = wn * std::sqrt(1.0 - zeta * zeta);
  return ss * wn / std::sqrt(1.0 - zeta * zeta) * std::exp(-zeta * wn * t) *
         std::sin(wd * t);
}

double transient_rise_time(const ActuatorModel& act, double level) {
  // First crossing of `level`: geometric scan from well below the response
  // time scales, then bisection inside the bracketing interval (the response
  // can overshoot, so only the first crossing counts).
  const double t_scale =
      std::min(2.0 * act.k1 / act.k2, std::sqrt(act.k1 / act.k3));
  double lo = 1e-6 * t_scale;
  const double t_cap = 1e7 * t_scale + 1.0;
  double hi = lo * 1.3;
  while (transient_step_response(act, hi) < level) {
    lo = hi;
    hi *= 1.3;
    if (hi > t_cap) return hi;  // never reaches the level (parameter abuse)
  }
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (transient_step_response(act, mid) < level) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double PneumaticConfig::pump_length(double attachment_m) const {
  // Keep a 1 mm floor so the closed-branch Boyle singularity at d = 0 cannot
  // be hit by a numerical excursion.
  return std::clamp(attachment_m - mount_offset_m, 1e-3, pump.stroke_m);
}

double PneumaticConfig::actuator_extension(double pump_length_m) const {
  const double offset = pump.stroke_m - actuator.stroke_m;
  return std::clamp(pump_length_m - offset, 0.0, actuator.stroke_m);
}

void PneumaticConfig::validate() const {
  pump.validate();
  actuator.validate();
  if (pump_model == PumpModelKind::Fitted && !fit)
    throw std::invalid_argument("PneumaticConfig: fitted pump model selected without coefficients");
  if (coulomb_friction_n < 0)
    throw std::invalid_argument("PneumaticConfig: coulomb_friction_n must be >= 0");
}

namespace {

bool valve_effective(const PneumaticConfig& cfg, const TankState& tank, bool valve_open) {
  if (!valve_open) return false;
  return tank.gauge_pa() >= cfg.valve_min_gauge_pa;
}

double compression_force(const PneumaticConfig& cfg, const TankState& tank, double x,
                         double rate) {
  if (cfg.pump_model == PumpModelKind::Fitted)
    return fitted_pump_force(*cfg.fit, cfg.pump, tank, x, rate);
  return theoretical_pump_force(cfg.pump, tank, x);
}

}  // namespace

double lumped_pneumatic_force(const PneumaticConfig& cfg, const TankState& tank,
                              const TransientState& transient, double d,
                              double ddot, bool valve_open) {
  if (ddot < 0.0) {
    const double x = std::clamp(cfg.pump.stroke_m - d, 0.0, cfg.pump.stroke_m);
    return compression_force(cfg, tank, x, ddot);
  }
  if (!valve_effective(cfg, tank, valve_open)) {
    return ddot > 0.0 ? -cfg.coulomb_friction_n : 0.0;
  }
  const double e = cfg.actuator_extension(d);
  return static_actuator_force(cfg.actuator, tank, e) * transient.delta;
}

double net_pneumatic_force(const PneumaticConfig& cfg, const TankState& tank,
                           const TransientState& transient, double d,
                           double ddot, bool valve_open) {
  if (ddot < 0.0) {
    const double x = std::clamp(cfg.pump.stroke_m - d, 0.0, cfg.pump.stroke_m);
    if (cfg.pump_model == PumpModelKind::Fitted)
      return fitted_pump_force(*cfg.fit, cfg.pump, tank, x, ddot);
    return net_theoretical_pump(cfg.pump, tank, x).f;
  }
  if (!valve_effective(cfg, tank, valve_open)) {
    return ddot > 0.0 ? -cfg.coulomb_friction_n : 0.0;
  }
  const double e = cfg.actuator_extension(d);
  return net_actuator_push(cfg.actuator, tank, e).f * transient.delta;
}

}  // namespace hopper
