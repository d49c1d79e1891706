#include "hopper/sysid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "hopper/rng.hpp"

namespace hopper {

namespace {

// Equality-constrained least squares via the KKT system
//   [A^T A  C^T] [theta ]   [A^T y]
//   [C      0  ] [lambda] = [r    ]
Eigen::VectorXd constrained_lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                                const Eigen::MatrixXd& C, const Eigen::VectorXd& r) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(C.rows());
  Eigen::MatrixXd K(n + m, n + m);
  K.setZero();
  K.topLeftCorner(n, n) = A.transpose() * A;
  K.topRightCorner(n, m) = C.transpose();
  K.bottomLeftCorner(m, n) = C;
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = A.transpose() * y;
  rhs.tail(m) = r;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible())
    throw DegenerateDataError("rank-deficient normal equations (degenerate data)");
  return lu.solve(rhs).head(n);
}

double rmse_of(const std::vector<double>& res) {
  if (res.empty()) return 0.0;
  double s = 0.0;
  for (double r : res) s += r * r;
  return std::sqrt(s / static_cast<double>(res.size()));
}

}  // namespace

PumpFitReport fit_pump_model(const std::vector<ForceDisplacementSample>& samples,
                             const PumpGeometry& geom) {
  geom.validate();
  const double l1 = geom.stage1_end_m;
  const double l2 = geom.stage2_start_m;

  // Split compressing samples into the four branches. Open-branch membership
  // depends on each sample's own tank pressure.
  std::vector<ForceDisplacementSample> s1, tr, s2, open;
  for (const auto& s : samples) {
    if (s.speed_mps >= 0.0) continue;
    TankState tank;
    tank.pressure_pa = s.tank_pa;
    const double d_c = critical_compression(geom, tank);
    if (geom.stroke_m - s.x_m <= d_c) {
      open.push_back(s);
    } else if (s.x_m < l1) {
      s1.push_back(s);
    } else if (s.x_m < l2) {
      tr.push_back(s);
    } else {
      s2.push_back(s);
    }
  }
  if (static_cast<int>(s1.size()) < 4) throw InsufficientSamplesError("stage1");
  if (static_cast<int>(tr.size()) < 4) throw InsufficientSamplesError("transition");
  if (static_cast<int>(s2.size()) < 4) throw InsufficientSamplesError("stage2");

  const int n = static_cast<int>(s1.size() + tr.size() + s2.size());
  Eigen::MatrixXd A(n, 7);
  Eigen::VectorXd y(n);
  A.setZero();
  int row = 0;
  for (const auto& s : s1) {
    A(row, 0) = s.x_m;
    A(row, 1) = 1.0;
    y(row++) = s.force_n;
  }
  for (const auto& s : tr) {
    A(row, 2) = s.x_m;
    A(row, 3) = 1.0;
    y(row++) = s.force_n;
  }
  for (const auto& s : s2) {
    A(row, 4) = s.x_m * s.x_m;
    A(row, 5) = s.x_m;
    A(row, 6) = 1.0;
    y(row++) = s.force_n;
  }

  Eigen::MatrixXd C(2, 7);
  C.setZero();
  C(0, 0) = l1; C(0, 1) = 1.0; C(0, 2) = -l1; C(0, 3) = -1.0;
  C(1, 2) = l2; C(1, 3) = 1.0; C(1, 4) = -l2 * l2; C(1, 5) = -l2; C(1, 6) = -1.0;
  const Eigen::VectorXd theta = constrained_lsq(A, y, C, Eigen::VectorXd::Zero(2));

  PumpFitReport rep;
  auto& cf = rep.coefficients;
  cf.m1 = theta(0); cf.b1 = theta(1);
  cf.m2 = theta(2); cf.b2 = theta(3);
  cf.c1 = theta(4); cf.c2 = theta(5); cf.c3 = theta(6);

  // Open branch: fit the quadratic multiplier against force / F_closed(x_C),
  // with the multiplier pinned to 1 at the valve-opening point of the mean
  // open-sample pressure.
  if (!open.empty()) {
    if (static_cast<int>(open.size()) < 4) throw InsufficientSamplesError("open");
    double p_mean = 0.0;
    for (const auto& s : open) p_mean += s.tank_pa;
    p_mean /= static_cast<double>(open.size());
    TankState tank;
    tank.pressure_pa = p_mean;
    const double x_c = geom.stroke_m - critical_compression(geom, tank);
    double scale;
    if (x_c < l1) scale = cf.m1 * x_c + cf.b1;
    else if (x_c < l2) scale = cf.m2 * x_c + cf.b2;
    else scale = fitted_closed_branch(cf, x_c);
    if (std::abs(scale) < 1e-12)
      throw DegenerateDataError("closed-branch force vanishes at the valve-opening point");

    Eigen::MatrixXd Ao(open.size(), 3);
    Eigen::VectorXd yo(open.size());
    for (int i = 0; i < static_cast<int>(open.size()); ++i) {
      const double x = open[i].x_m;
      Ao(i, 0) = x * x;
      Ao(i, 1) = x;
      Ao(i, 2) = 1.0;
      yo(i) = open[i].force_n / scale;
    }
    Eigen::MatrixXd Co(1, 3);
    Co << x_c * x_c, x_c, 1.0;
    Eigen::VectorXd ro(1);
    ro << 1.0;
    const Eigen::VectorXd th2 = constrained_lsq(Ao, yo, Co, ro);
    cf.c4 = th2(0); cf.c5 = th2(1); cf.c6 = th2(2);

    std::vector<double> res;
    TankState t2;
    for (const auto& s : open) {
      t2.pressure_pa = s.tank_pa;
      res.push_back(fitted_pump_force(cf, geom, t2, s.x_m, -1.0) - s.force_n);
    }
    rep.rmse_open = rmse_of(res);
    rep.n_open = static_cast<int>(open.size());
    const double fc = scale;
    rep.continuity_valve =
        std::abs(fc * (cf.c4 * x_c * x_c + cf.c5 * x_c + cf.c6) - fc) / std::max(1.0, std::abs(fc));
  }

  auto branch_res = [&](const std::vector<ForceDisplacementSample>& seg,
                        std::function<double(double)> f) {
    std::vector<double> res;
    res.reserve(seg.size());
    for (const auto& s : seg) res.push_back(f(s.x_m) - s.force_n);
    return res;
  };
  const auto r1 = branch_res(s1, [&](double x) { return cf.m1 * x + cf.b1; });
  const auto r2 = branch_res(tr, [&](double x) { return cf.m2 * x + cf.b2; });
  const auto r3 = branch_res(s2, [&](double x) { return fitted_closed_branch(cf, x); });
  rep.rmse_stage1 = rmse_of(r1);
  rep.rmse_transition = rmse_of(r2);
  rep.rmse_stage2 = rmse_of(r3);
  rep.n_stage1 = static_cast<int>(s1.size());
  rep.n_transition = static_cast<int>(tr.size());
  rep.n_stage2 = static_cast<int>(s2.size());
  std::vector<double> all;
  all.insert(all.end(), r1.begin(), r1.end());
  all.insert(all.end(), r2.begin(), r2.end());
  all.insert(all.end(), r3.begin(), r3.end());
  rep.rmse_total = rmse_of(all);

  const double f_l1 = cf.m1 * l1 + cf.b1;
  rep.continuity_l1 =
      std::abs((cf.m2 * l1 + cf.b2) - f_l1) / std::max(1.0, std::abs(f_l1));
  const double f_l2 = cf.m2 * l2 + cf.b2;
  rep.continuity_l2 =
      std::abs(fitted_closed_branch(cf, l2) - f_l2) / std::max(1.0, std::abs(f_l2));
  return rep;
}

namespace {

double transient_cost(const std::vector<StepResponseSample>& samples, double k1,
                      double k2) {
  ActuatorModel act;
  act.k1 = k1;
  act.k2 = k2;
  act.k3 = 1.0;
  double s = 0.0;
  for (const auto& p : samples) {
    const double e = transient_step_response(act, p.t_s) - p.delta;
    s += e * e;
  }
  return s;
}

// Nelder-Mead on log10(k1), log10(k2).
void simplex_refine(const std::vector<StepResponseSample>& samples, double& k1,
                    double& k2) {
  using V = std::array<double, 2>;
  auto cost = [&](const V& v) {
    return transient_cost(samples, std::pow(10.0, v[0]), std::pow(10.0, v[1]));
  };
  std::array<V, 3> s = {V{std::log10(k1), std::log10(k2)},
                        V{std::log10(k1) + 0.15, std::log10(k2)},
                        V{std::log10(k1), std::log10(k2) + 0.15}};
  std::array<double, 3> f = {cost(s[0]), cost(s[1]), cost(s[2])};
  for (int it = 0; it < 300; ++it) {
    // order
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if (f[j] < f[i]) { std::swap(f[i], f[j]); std::swap(s[i], s[j]); }
    if (std::abs(f[2] - f[0]) < 1e-16 * (1.0 + std::abs(f[0]))) break;
    const V centroid{0.5 * (s[0][0] + s[1][0]), 0.5 * (s[0][1] + s[1][1])};
    auto along = [&](double t) {
      return V{centroid[0] + t * (centroid[0] - s[2][0]),
               centroid[1] + t * (centroid[1] - s[2][1])};
    };
    const V xr = along(1.0);
    const double fr = cost(xr);
    if (fr < f[0]) {
      const V xe = along(2.0);
      const double fe = cost(xe);
      if (fe < fr) { s[2] = xe; f[2] = fe; } else { s[2] = xr; f[2] = fr; }
    } else if (fr < f[1]) {
      s[2] = xr; f[2] = fr;
    } else {
      const V xc = along(-0.5);
      const double fc = cost(xc);
      if (fc < f[2]) { s[2] = xc; f[2] = fc; }
      else {
        for (int i = 1; i < 3; ++i) {
          s[i] = {0.5 * (s[i][0] + s[0][0]), 0.5 * (s[i][1] + s[0][1])};
          f[i] = cost(s[i]);
        }
      }
    }
  }
  k1 = std::pow(10.0, s[0][0]);
  k2 = std::pow(10.0, s[0][1]);
}

}  // namespace

TransientFitReport fit_transient(const std::vector<StepResponseSample>& samples,
                                 double rmse_threshold) {
  if (samples.size() < 4) throw InsufficientSamplesError("step-response");
  for (size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t_s > samples[i - 1].t_s))
      throw FitError("step-response times must be strictly increasing");

  TransientFitReport rep;
  double best = std::numeric_limits<double>::infinity();
  double bk1 = 1e-4, bk2 = 1e-2;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      const double k1 = std::pow(10.0, -7.0 + 6.0 * i / 11.0);
      const double k2 = std::pow(10.0, -5.0 + 5.0 * j / 11.0);
      const double c = transient_cost(samples, k1, k2);
      ++rep.starts_evaluated;
      if (c < best) { best = c; bk1 = k1; bk2 = k2; }
    }
  }
  simplex_refine(samples, bk1, bk2);

  rep.k1 = bk1;
  rep.k2 = bk2;
  rep.rmse = std::sqrt(transient_cost(samples, bk1, bk2) /
                       static_cast<double>(samples.size()));
  rep.stable = bk1 > 0.0 && bk2 > 0.0;
  if (!rep.stable || rep.rmse > rmse_threshold)
    throw FitError("transient fit quality insufficient (rmse " +
                   std::to_string(rep.rmse) + ")");

  ActuatorModel act;
  act.k1 = bk1;
  act.k2 = bk2;
  const double t63 = transient_rise_time(act, 0.63);
  rep.degenerate_inertia = t63 < samples.front().t_s || bk1 < 1e-8;
  return rep;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  SyntheticData out;
  Rng rng(spec.seed);
  auto noisy = [&](double v) { return v * (1.0 + spec.noise_rel * rng.gaussian()); };

  switch (spec.kind) {
    case SyntheticKind::Pump: {
      for (double p : spec.tank_pressures_pa) {
        TankState tank;
        tank.pressure_pa = p;
        tank.volume_m3 = spec.tank_volume_m3;
        for (int i = 0; i < spec.samples_per_curve; ++i) {
          const double x = spec.geom.stroke_m * (i + 0.5) /
                           static_cast<double>(spec.samples_per_curve);
          double f;
          if (spec.fit) {
            f = fitted_pump_force(*spec.fit, spec.geom, tank, x, spec.speed_mps);
          } else {
            // net theoretical force, as a tensile tester would measure
            f = theoretical_pump_force(spec.geom, tank, x) -
                tank.atmospheric_pa * spec.geom.area_at(x);
          }
          out.force_displacement.push_back({x, noisy(f), p, spec.speed_mps});
        }
      }
      break;
    }
    case SyntheticKind::Actuator: {
      for (double p : spec.tank_pressures_pa) {
        TankState tank;
        tank.pressure_pa = p;
        tank.volume_m3 = spec.tank_volume_m3;
        for (int i = 0; i < spec.samples_per_curve; ++i) {
          const double e = spec.actuator.stroke_m * i /
                           static_cast<double>(spec.samples_per_curve - 1);
          const double f = static_actuator_force(spec.actuator, tank, e);
          out.force_displacement.push_back({e, noisy(f), p, std::abs(spec.speed_mps)});
        }
      }
      break;
    }
    case SyntheticKind::Transient: {
      double t_end = spec.t_end_s;
      if (t_end <= 0.0) t_end = 6.0 * transient_rise_time(spec.actuator, 0.63);
      for (int i = 1; i <= spec.samples_per_curve; ++i) {
        const double t = t_end * i / static_cast<double>(spec.samples_per_curve);
        out.step_response.push_back({t, noisy(transient_step_response(spec.actuator, t))});
      }
      break;
    }
  }
  return out;
}

}  // namespace hopper
