#include "hopper/trajopt.hpp"

#include <algorithm>
#include <cmath>

namespace hopper {

void TrajOptConfig::validate() const {
  if (!(leg_min_m > 0 && leg_min_m < leg_max_m))
    throw std::invalid_argument("TrajOptConfig: require 0 < leg_min < leg_max");
  if (!(leg_max_m <= apex_z_m))
    throw std::invalid_argument("TrajOptConfig: apex below full extension (no drop)");
  if (n_desc < 5 || n_asc < 5)
    throw std::invalid_argument("TrajOptConfig: node counts must be >= 5");
  if (!(m_tilde_kg > 0)) throw std::invalid_argument("TrajOptConfig: mass must be > 0");
  pneu.validate();
}

namespace {

struct F2 {
  double f = 0, dfdL = 0, dfdt = 0;
};

// Net pump resistive force and slope wrt leg length (descent branch).
F2 pump_force_slope(const TrajOptConfig& c, double L) {
  const PumpGeometry& g = c.pneu.pump;
  double dpump = L - c.pneu.mount_offset_m;
  double dd_dL = 1.0;
  if (dpump < 1e-3) { dpump = 1e-3; dd_dL = 0.0; }
  if (dpump > g.stroke_m) { dpump = g.stroke_m; dd_dL = 0.0; }
  const double x = g.stroke_m - dpump;
  const double dx_dL = -dd_dL;

  if (c.pneu.pump_model == PumpModelKind::Fitted) {
    const PumpFitCoefficients& fit = *c.pneu.fit;
    TankState tank;
    tank.pressure_pa = c.tank_pressure_pa;
    tank.volume_m3 = c.tank_volume_m3;
    const double f = fitted_pump_force(fit, g, tank, x, -1.0);
    const double d_c = critical_compression(g, tank);
    double dfdx;
    if (g.stroke_m - x <= d_c) {
      const double x_c = g.stroke_m - d_c;
      double scale;
      if (x_c < g.stage1_end_m) scale = fit.m1 * x_c + fit.b1;
      else if (x_c < g.stage2_start_m) scale = fit.m2 * x_c + fit.b2;
      else scale = fitted_closed_branch(fit, x_c);
      dfdx = scale * (2.0 * fit.c4 * x + fit.c5);
    } else if (x < g.stage1_end_m) {
      dfdx = fit.m1;
    } else if (x < g.stage2_start_m) {
      dfdx = fit.m2;
    } else {
      dfdx = 2.0 * fit.c1 * x + fit.c2;
    }
    return {f, dfdx * dx_dL, 0.0};
  }

  TankState tank;
  tank.pressure_pa = c.tank_pressure_pa;
  tank.volume_m3 = c.tank_volume_m3;
  const ForceSlope fs = net_theoretical_pump(g, tank, x);
  return {fs.f, fs.dfdx * dx_dL, 0.0};
}

// Net actuator push and slopes wrt leg length and phase time (explosive ascent).
F2 actuator_force_slope(const TrajOptConfig& c, double L, double t) {
  const ActuatorModel& act = c.pneu.actuator;
  double dpump = L - c.pneu.mount_offset_m;
  double dd_dL = 1.0;
  if (dpump < 1e-3) { dpump = 1e-3; dd_dL = 0.0; }
  if (dpump > c.pneu.pump.stroke_m) { dpump = c.pneu.pump.stroke_m; dd_dL = 0.0; }
  const double off = c.pneu.pump.stroke_m - act.stroke_m;
  double e = dpump - off;
  double de_dL = dd_dL;
  if (e < 0.0) { e = 0.0; de_dL = 0.0; }
  if (e > act.stroke_m) { e = act.stroke_m; de_dL = 0.0; }

  TankState tank;
  tank.pressure_pa = c.tank_pressure_pa;
  tank.volume_m3 = c.tank_volume_m3;
  const ForceSlope push = net_actuator_push(act, tank, e);
  if (push.f <= 0.0 && push.dfdx == 0.0) return {0.0, 0.0, 0.0};

  const double delta = transient_step_response(act, t);
  const double ddelta = transient_step_response_rate(act, t);

  F2 out;
  out.f = delta * push.f;
  out.dfdL = delta * push.dfdx * de_dL;
  out.dfdt = ddelta * push.f;
  return out;
}

F2 phase_force(const TrajOptConfig& c, bool ascent, double L, double t_phase) {
  if (!ascent) return pump_force_slope(c, L);
  if (!c.use_actuator) return {0.0, 0.0, 0.0};
  return actuator_force_slope(c, L, c.valve_lead_s + t_phase);
}

// Smooth saturating motor speed line: F <= f_max * eta(V) with
// eta = smooth-max(0, 1 - V/v_nom), so the row stays feasible with F >= 0
// even past the no-load speed.
struct SpeedLine {
  double eta = 1.0;
  double deta_dv = 0.0;
};

SpeedLine speed_line(const MotorEnvelope& m, double v) {
  constexpr double eps = 0.02;
  const double u = 1.0 - v / m.v_nom_mps;
  const double r = std::sqrt(u * u + eps * eps);
  SpeedLine out;
  out.eta = 0.5 * (u + r);
  out.deta_dv = -0.5 * (1.0 + u / r) / m.v_nom_mps;
  return out;
}

}  // namespace

TrajOptProblem build_problem(const TrajOptConfig& cfg) {
  cfg.validate();
  TrajOptProblem p;
  p.cfg = cfg;
  if (p.cfg.use_actuator && p.cfg.valve_lead_s < 0.0)
    p.cfg.valve_lead_s = valve_timing(p.cfg.pneu.actuator);
  if (p.cfg.valve_lead_s < 0.0) p.cfg.valve_lead_s = 0.0;
  p.n_vars = 2 + 3 * (cfg.n_desc + 1) + 3 * (cfg.n_asc + 1);
  p.n_eq = 2 * cfg.n_desc + 2 * cfg.n_asc;
  const bool speed_rows = std::isfinite(cfg.motor.v_nom_mps) && cfg.motor.v_nom_mps > 0;
  p.n_ineq = (cfg.n_desc + 1) + (cfg.n_asc + 1) + (speed_rows ? cfg.n_asc + 1 : 0);
  return p;
}

Eigen::VectorXd TrajOptProblem::default_guess() const {
  const auto& c = cfg;
  Eigen::VectorXd z(n_vars);
  const double v0 = std::sqrt(std::max(0.0, 2.0 * c.gravity * (c.apex_z_m - c.leg_max_m)));
  const double dL = c.leg_max_m - c.leg_min_m;
  z(iTd()) = std::clamp(2.0 * dL / (v0 + 0.6), 0.05, 0.8);
  z(iTa()) = c.use_actuator ? 0.12 : 0.3;
  for (int i = 0; i <= c.n_desc; ++i) {
    const double s = static_cast<double>(i) / c.n_desc;
    z(iLd(i)) = c.leg_max_m + s * (c.leg_min_m - c.leg_max_m);
    z(iVd(i)) = -v0 * (1.0 - s);
    z(iFd(i)) = c.m_tilde_kg * c.gravity;
  }
  const double va_guess = c.use_actuator ? 1.5 : v0;
  for (int i = 0; i <= c.n_asc; ++i) {
    const double s = static_cast<double>(i) / c.n_asc;
    z(iLa(i)) = c.leg_min_m + s * (c.leg_max_m - c.leg_min_m);
    z(iVa(i)) = s * va_guess;
    z(iFa(i)) = c.m_tilde_kg * c.gravity;
  }
  return z;
}

NlpProblem TrajOptProblem::nlp(const std::optional<Eigen::VectorXd>& guess) const {
  const TrajOptProblem& P = *this;
  const TrajOptConfig& c = cfg;
  NlpProblem nl;
  nl.n = n_vars;
  nl.n_eq = n_eq;
  nl.n_ineq = n_ineq;
  const double inf = std::numeric_limits<double>::infinity();
  nl.lower = Eigen::VectorXd::Constant(n_vars, -inf);
  nl.upper = Eigen::VectorXd::Constant(n_vars, inf);
  nl.scale = Eigen::VectorXd::Ones(n_vars);

  const double f_lo = c.motor.allow_pull ? -c.motor.f_max_n : 0.0;
  nl.lower(iTd()) = 0.02; nl.upper(iTd()) = 2.0;
  nl.lower(iTa()) = 0.02; nl.upper(iTa()) = 2.0;
  nl.scale(iTd()) = 0.1; nl.scale(iTa()) = 0.1;
  for (int i = 0; i <= c.n_desc; ++i) {
    nl.lower(iLd(i)) = c.leg_min_m; nl.upper(iLd(i)) = c.leg_max_m;
    nl.lower(iVd(i)) = -10.0; nl.upper(iVd(i)) = 0.0;
    nl.lower(iFd(i)) = f_lo; nl.upper(iFd(i)) = c.motor.f_max_n;
    nl.scale(iLd(i)) = 0.1; nl.scale(iVd(i)) = 1.0; nl.scale(iFd(i)) = 50.0;
  }
  for (int i = 0; i <= c.n_asc; ++i) {
    nl.lower(iLa(i)) = c.leg_min_m; nl.upper(iLa(i)) = c.leg_max_m;
    nl.lower(iVa(i)) = 0.0; nl.upper(iVa(i)) = 10.0;
    nl.lower(iFa(i)) = f_lo; nl.upper(iFa(i)) = c.motor.f_max_n;
    nl.scale(iLa(i)) = 0.1; nl.scale(iVa(i)) = 1.0; nl.scale(iFa(i)) = 50.0;
  }

  // boundary pins
  const double v0 = std::sqrt(std::max(0.0, 2.0 * c.gravity * (c.apex_z_m - c.leg_max_m)));
  auto pin = [&](int idx, double v) { nl.lower(idx) = v; nl.upper(idx) = v; };
  pin(iLd(0), c.leg_max_m);
  pin(iVd(0), -v0);
  pin(iLd(c.n_desc), c.leg_min_m);
  pin(iVd(c.n_desc), 0.0);
  pin(iLa(0), c.leg_min_m);
  pin(iVa(0), 0.0);
  pin(iLa(c.n_asc), c.leg_max_m);
  pin(iFa(c.n_asc), 0.0);  // GRF -> 0 at liftoff
  if (c.objective == TrajObjective::Periodic) pin(iVa(c.n_asc), v0);  // apex return

  nl.x0 = guess ? *guess : default_guess();

  // objective
  nl.objective = [P, c](const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
    if (grad) grad->setZero(P.n_vars);
    double effort = 0.0;
    auto phase_effort = [&](int n, auto iF, int iT) {
      const double h = z(iT) / n;
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        const double F = z(iF(i));
        acc += w * F * F;
        if (grad) (*grad)(iF(i)) += 2.0 * h * w * F;
      }
      if (grad) (*grad)(iT) += acc / n;
      return h * acc;
    };
    effort += phase_effort(c.n_desc, [&](int i) { return P.iFd(i); }, P.iTd());
    effort += phase_effort(c.n_asc, [&](int i) { return P.iFa(i); }, P.iTa());

    if (c.objective == TrajObjective::Periodic) {
      if (grad) return effort;
      return effort;
    }
    const double vN = z(P.iVa(c.n_asc));
    const double LN = z(P.iLa(c.n_asc));
    const double arg = vN * vN / (2.0 * c.gravity) + LN;
    if (grad) {
      *grad *= c.cost_c;
      (*grad)(P.iVa(c.n_asc)) += -(vN / c.gravity) / arg;
      (*grad)(P.iLa(c.n_asc)) += -1.0 / arg;
    }
    return c.cost_c * effort - std::log(arg);
  };

  // equality constraints: trapezoidal defects for both phases
  nl.eq = [P, c](const Eigen::VectorXd& z, Eigen::VectorXd& ceq, Eigen::MatrixXd* J) {
    ceq.resize(P.n_eq);
    if (J) J->setZero(P.n_eq, P.n_vars);
    const double m = c.m_tilde_kg, g = c.gravity;
    int row = 0;
    auto do_phase = [&](int n, bool ascent, auto iL, auto iV, auto iF, int iT) {
      const double T = z(iT);
      const double h = T / n;
      std::vector<F2> pf(n + 1);
      for (int i = 0; i <= n; ++i)
        pf[i] = phase_force(c, ascent, z(iL(i)), T * i / n);
      for (int i = 0; i < n; ++i) {
        const double Li = z(iL(i)), Lj = z(iL(i + 1));
        const double Vi = z(iV(i)), Vj = z(iV(i + 1));
        const double Fi = z(iF(i)), Fj = z(iF(i + 1));
        const double ai = (pf[i].f + Fi) / m - g;
        const double aj = (pf[i + 1].f + Fj) / m - g;
        ceq(row) = Lj - Li - 0.5 * h * (Vi + Vj);
        if (J) {
          (*J)(row, iL(i + 1)) = 1.0;
          (*J)(row, iL(i)) = -1.0;
          (*J)(row, iV(i)) = -0.5 * h;
          (*J)(row, iV(i + 1)) = -0.5 * h;
          (*J)(row, iT) = -0.5 * (Vi + Vj) / n;
        }
        ++row;
        ceq(row) = Vj - Vi - 0.5 * h * (ai + aj);
        if (J) {
          (*J)(row, iV(i + 1)) = 1.0;
          (*J)(row, iV(i)) = -1.0;
          (*J)(row, iF(i)) = -0.5 * h / m;
          (*J)(row, iF(i + 1)) = -0.5 * h / m;
          (*J)(row, iL(i)) = -0.5 * h * pf[i].dfdL / m;
          (*J)(row, iL(i + 1)) = -0.5 * h * pf[i + 1].dfdL / m;
          // time enters through h and through delta(t_i)
          (*J)(row, iT) = -0.5 * (ai + aj) / n -
                          0.5 * h *
                              (pf[i].dfdt * (static_cast<double>(i) / n) +
                               pf[i + 1].dfdt * (static_cast<double>(i + 1) / n)) /
                              m;
        }
        ++row;
      }
    };
    do_phase(c.n_desc, false, [&](int i) { return P.iLd(i); },
             [&](int i) { return P.iVd(i); }, [&](int i) { return P.iFd(i); },
             P.iTd());
    do_phase(c.n_asc, true, [&](int i) { return P.iLa(i); },
             [&](int i) { return P.iVa(i); }, [&](int i) { return P.iFa(i); },
             P.iTa());
  };

  // inequality constraints: GRF >= 0 and the ascent motor speed line
  const bool speed_rows = std::isfinite(c.motor.v_nom_mps) && c.motor.v_nom_mps > 0;
  nl.ineq = [P, c, speed_rows](const Eigen::VectorXd& z, Eigen::VectorXd& cin,
                               Eigen::MatrixXd* J) {
    cin.resize(P.n_ineq);
    if (J) J->setZero(P.n_ineq, P.n_vars);
    int row = 0;
    auto grf_phase = [&](int n, bool ascent, auto iL, auto iF, int iT) {
      const double T = z(iT);
      for (int i = 0; i <= n; ++i) {
        const F2 pf = phase_force(c, ascent, z(iL(i)), T * i / n);
        cin(row) = -(pf.f + z(iF(i)));
        if (J) {
          (*J)(row, iF(i)) = -1.0;
          (*J)(row, iL(i)) = -pf.dfdL;
          (*J)(row, iT) = -pf.dfdt * (static_cast<double>(i) / n);
        }
        ++row;
      }
    };
    grf_phase(c.n_desc, false, [&](int i) { return P.iLd(i); },
              [&](int i) { return P.iFd(i); }, P.iTd());
    grf_phase(c.n_asc, true, [&](int i) { return P.iLa(i); },
              [&](int i) { return P.iFa(i); }, P.iTa());
    if (speed_rows) {
      for (int i = 0; i <= c.n_asc; ++i) {
        const SpeedLine sl = speed_line(c.motor, z(P.iVa(i)));
        cin(row) = z(P.iFa(i)) - c.motor.f_max_n * sl.eta;
        if (J) {
          (*J)(row, P.iFa(i)) = 1.0;
          (*J)(row, P.iVa(i)) = -c.motor.f_max_n * sl.deta_dv;
        }
        ++row;
      }
    }
  };
  return nl;
}

Eigen::VectorXd defect_residuals(const TrajOptProblem& problem,
                                 const Eigen::VectorXd& z) {
  Eigen::VectorXd c;
  problem.nlp(std::nullopt).eq(z, c, nullptr);
  return c;
}

namespace {

TrajSolution extract(const TrajOptProblem& P, const Eigen::VectorXd& z,
                     const NlpResult& res) {
  const TrajOptConfig& c = P.cfg;
  TrajSolution s;
  s.T_desc = z(P.iTd());
  s.T_asc = z(P.iTa());
  for (int i = 0; i <= c.n_desc; ++i) {
    s.t_desc.push_back(s.T_desc * i / c.n_desc);
    s.L_desc.push_back(z(P.iLd(i)));
    s.V_desc.push_back(z(P.iVd(i)));
    s.F_desc.push_back(z(P.iFd(i)));
  }
  for (int i = 0; i <= c.n_asc; ++i) {
    s.t_asc.push_back(s.T_asc * i / c.n_asc);
    s.L_asc.push_back(z(P.iLa(i)));
    s.V_asc.push_back(z(P.iVa(i)));
    s.F_asc.push_back(z(P.iFa(i)));
  }
  const double vN = s.V_asc.back(), LN = s.L_asc.back();
  s.predicted_apex_height_m = vN * vN / (2.0 * c.gravity) + LN - c.leg_max_m;
  s.valve_trigger_s = c.use_actuator ? -c.valve_lead_s : 0.0;
  s.objective = res.objective;
  s.max_defect = std::max(res.max_eq_violation, 0.0);
  s.max_path_violation = std::max(res.max_ineq_violation, 0.0);
  s.stationarity = res.stationarity;
  s.converged = res.converged;
  s.message = res.message;
  s.plan_tank_pa = c.tank_pressure_pa;
  s.tank_volume_m3 = c.tank_volume_m3;
  s.m_tilde_kg = c.m_tilde_kg;
  s.apex_z_m = c.apex_z_m;
  s.used_actuator = c.use_actuator;
  return s;
}

}  // namespace

TrajSolution solve(const TrajOptProblem& problem,
                   const std::optional<Eigen::VectorXd>& initial_guess) {
  std::optional<Eigen::VectorXd> guess = initial_guess;
  // The explosive cost with a small effort weight is nearly flat along the
  // optimal arc; a short homotopy on the weight conditions the warm start.
  if (problem.cfg.objective == TrajObjective::Explosive && !guess &&
      problem.cfg.cost_c < 1e-2) {
    TrajOptConfig pre_cfg = problem.cfg;
    pre_cfg.cost_c = 1e-2;
    pre_cfg.nlp.tol_feas = 1e-7;
    pre_cfg.nlp.tol_stat = 1e-5;
    const TrajOptProblem pre = build_problem(pre_cfg);
    NlpResult pre_res = solve_nlp(pre.nlp(std::nullopt), pre_cfg.nlp);
    guess = pre_res.x;
  }
  NlpProblem nl = problem.nlp(guess);
  NlpResult res = solve_nlp(nl, problem.cfg.nlp);
  TrajSolution sol = extract(problem, res.x, res);
  if (!res.converged) {
    // one retry from the solved iterate with a stiffer penalty start
    NlpOptions o2 = problem.cfg.nlp;
    o2.mu0 = 1e5;
    NlpProblem nl2 = problem.nlp(res.x);
    NlpResult res2 = solve_nlp(nl2, o2);
    if (res2.converged ||
        std::max(res2.max_eq_violation, res2.max_ineq_violation) <
            std::max(res.max_eq_violation, res.max_ineq_violation)) {
      res = res2;
      sol = extract(problem, res2.x, res2);
    }
  }
  if (!res.converged)
    throw SolverFailure("trajectory optimization did not converge: defect " +
                            std::to_string(sol.max_defect) + ", stationarity " +
                            std::to_string(sol.stationarity),
                        sol);
  return sol;
}

std::vector<double> feedforward_compensation(const TrajSolution& sol,
                                             const PneumaticConfig& pneu,
                                             double tank_volume_m3,
                                             double tank_pressure_now_pa) {
  std::vector<double> out;
  out.reserve(sol.F_desc.size());
  for (size_t i = 0; i < sol.F_desc.size(); ++i) {
    const double L = sol.L_desc[i];
    out.push_back(sol.F_desc[i] +
                  net_pump_force_at(pneu, sol.plan_tank_pa, tank_volume_m3, L) -
                  net_pump_force_at(pneu, tank_pressure_now_pa, tank_volume_m3, L));
  }
  return out;
}

double valve_timing(const ActuatorModel& act) { return transient_rise_time(act, 0.9); }

PhaseProfile descent_profile(const TrajSolution& sol) {
  PhaseProfile p;
  p.leg_m = sol.L_desc;
  p.force_n = sol.F_desc;
  return p;
}

PhaseProfile ascent_profile(const TrajSolution& sol) {
  PhaseProfile p;
  p.leg_m = sol.L_asc;
  p.force_n = sol.F_asc;
  return p;
}

}  // namespace hopper
