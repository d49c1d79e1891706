#include "hopper/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <vector>

namespace hopper {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd project(const VectorXd& x, const VectorXd& lo, const VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Augmented Lagrangian value and gradient at x for fixed multipliers.
struct AugLag {
  const NlpProblem& p;
  VectorXd lam_eq;
  VectorXd lam_in;
  double mu;

  double eval(const VectorXd& x, VectorXd* grad) const {
    VectorXd gf;
    double val = p.objective(x, grad ? &gf : nullptr);
    if (grad) *grad = gf;

    if (p.n_eq > 0) {
      VectorXd c;
      MatrixXd J;
      p.eq(x, c, grad ? &J : nullptr);
      const VectorXd t = lam_eq + mu * c;
      val += 0.5 / mu * (t.squaredNorm() - lam_eq.squaredNorm());
      if (grad) grad->noalias() += J.transpose() * t;
    }
    if (p.n_ineq > 0) {
      VectorXd c;
      MatrixXd J;
      p.ineq(x, c, grad ? &J : nullptr);
      VectorXd t = lam_in + mu * c;
      for (int i = 0; i < t.size(); ++i) t(i) = std::max(0.0, t(i));
      val += 0.5 / mu * (t.squaredNorm() - lam_in.squaredNorm());
      if (grad) grad->noalias() += J.transpose() * t;
    }
    return val;
  }
};

// Projected L-BFGS with backtracking on the projected path.
int minimize_inner(const AugLag& al, const NlpProblem& p, VectorXd& x,
                   double grad_tol, int max_iter, const VectorXd& scale,
                   int memory) {
  const int n = p.n;
  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  VectorXd g(n);
  double f = al.eval(x, &g);
  int it = 0;
  bool tried_reset = false;

  auto proj_grad_inf = [&](const VectorXd& xx, const VectorXd& gg) {
    const VectorXd step = gg.cwiseProduct(scale.cwiseProduct(scale));
    return (xx - project(xx - step, p.lower, p.upper)).cwiseQuotient(scale)
        .lpNorm<Eigen::Infinity>();
  };

  while (it < max_iter) {
    if (proj_grad_inf(x, g) < grad_tol) break;
    ++it;

    const VectorXd gs = g.cwiseProduct(scale);
    const int m = static_cast<int>(s_hist.size());
    VectorXd d;
    {
      VectorXd q = gs;
      std::vector<double> a(m);
      for (int i = m - 1; i >= 0; --i) {
        a[i] = rho_hist[i] * s_hist[i].dot(q);
        q -= a[i] * y_hist[i];
      }
      if (m > 0) {
        const double gamma =
            s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        q *= std::clamp(gamma, 1e-10, 1e10);
      }
      for (int i = 0; i < m; ++i) {
        const double b = rho_hist[i] * y_hist[i].dot(q);
        q += (a[i] - b) * s_hist[i];
      }
      d = -q;
    }
    // freeze directions that push an active bound outward
    for (int i = 0; i < n; ++i) {
      if ((x(i) <= p.lower(i) + 1e-14 && d(i) < 0) ||
          (x(i) >= p.upper(i) - 1e-14 && d(i) > 0))
        d(i) = 0.0;
    }
    if (gs.dot(d) >= 0) {
      d = -gs;
      for (int i = 0; i < n; ++i) {
        if ((x(i) <= p.lower(i) + 1e-14 && d(i) < 0) ||
            (x(i) >= p.upper(i) - 1e-14 && d(i) > 0))
          d(i) = 0.0;
      }
      if (d.norm() == 0.0) break;  // fully pinned
    }

    // backtracking with the projected sufficient-decrease test
    double step = 1.0;
    bool accepted = false;
    VectorXd x_new, g_new;
    double f_new = 0.0;
    for (int ls = 0; ls < 70; ++ls) {
      const VectorXd xc =
          project(x + step * d.cwiseProduct(scale), p.lower, p.upper);
      if ((xc - x).lpNorm<Eigen::Infinity>() == 0.0) break;  // no movement left
      const double fc = al.eval(xc, nullptr);
      const double pred = g.dot(xc - x);  // directional decrease along the path
      if (std::isfinite(fc) && fc <= f + 1e-4 * pred) {
        x_new = xc;
        f_new = fc;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (tried_reset || s_hist.empty()) break;
      // stale curvature can poison the direction once mu jumps; retry clean
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      tried_reset = true;
      continue;
    }
    tried_reset = false;

    g_new.resize(n);
    const double f_check = al.eval(x_new, &g_new);
    (void)f_check;
    const VectorXd s = (x_new - x).cwiseQuotient(scale);
    const VectorXd yv = (g_new - g).cwiseProduct(scale);
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = x_new;
    g = g_new;
    f = f_new;
  }
  return it;
}

// KKT residual with least-squares multipliers over the near-active set;
// components pinned at bounds contribute only sign violations.
double kkt_stationarity(const NlpProblem& p, const VectorXd& x,
                        const VectorXd& scale, VectorXd* lam_eq_out,
                        VectorXd* lam_in_out) {
  VectorXd g;
  p.objective(x, &g);

  MatrixXd Jeq(0, p.n), Jin(0, p.n);
  VectorXd ceq, cin;
  if (p.n_eq > 0) p.eq(x, ceq, &Jeq);
  if (p.n_ineq > 0) p.ineq(x, cin, &Jin);

  std::vector<int> active;
  for (int i = 0; i < p.n_ineq; ++i)
    if (cin(i) > -1e-5) active.push_back(i);

  std::vector<int> free_idx;
  for (int i = 0; i < p.n; ++i) {
    const bool at_lo = x(i) <= p.lower(i) + 1e-12;
    const bool at_hi = x(i) >= p.upper(i) - 1e-12;
    if (!at_lo && !at_hi) free_idx.push_back(i);
  }

  // least-squares multipliers with non-negativity on the inequality block,
  // by dropping negative-multiplier rows and re-solving (approximate NNLS)
  VectorXd lam_eq = VectorXd::Zero(p.n_eq);
  VectorXd lam_full = VectorXd::Zero(p.n_ineq);
  for (int round = 0; round < 6; ++round) {
    const int m = p.n_eq + static_cast<int>(active.size());
    if (m == 0 || free_idx.empty()) break;
    // rows weighted by the variable scales so the multipliers minimize the
    // same scaled residual the stationarity metric reports
    MatrixXd At(free_idx.size(), m);
    VectorXd gf(free_idx.size());
    for (size_t r = 0; r < free_idx.size(); ++r) {
      const int i = free_idx[r];
      const double w = scale(i);
      gf(r) = g(i) * w;
      for (int j = 0; j < p.n_eq; ++j) At(r, j) = Jeq(j, i) * w;
      for (size_t j = 0; j < active.size(); ++j)
        At(r, p.n_eq + j) = Jin(active[j], i) * w;
    }
    const VectorXd lam = At.colPivHouseholderQr().solve(-gf);
    lam_eq = lam.head(p.n_eq);
    lam_full.setZero();
    std::vector<int> keep;
    bool any_negative = false;
    for (size_t j = 0; j < active.size(); ++j) {
      if (lam(p.n_eq + j) >= 0.0) {
        keep.push_back(active[j]);
        lam_full(active[j]) = lam(p.n_eq + j);
      } else if (cin(active[j]) > 1e-10) {
        keep.push_back(active[j]);  // violated rows stay regardless of sign
        any_negative = true;
      } else {
        any_negative = true;
      }
    }
    if (!any_negative) break;
    active = std::move(keep);
  }

  VectorXd gl = g;
  if (p.n_eq > 0) gl.noalias() += Jeq.transpose() * lam_eq;
  for (int i = 0; i < p.n_ineq; ++i)
    if (lam_full(i) != 0.0) gl.noalias() += Jin.row(i).transpose() * lam_full(i);

  double stat = 0.0;
  for (int i = 0; i < p.n; ++i) {
    const bool at_lo = x(i) <= p.lower(i) + 1e-12;
    const bool at_hi = x(i) >= p.upper(i) - 1e-12;
    double r = gl(i);
    if (at_lo && at_hi) r = 0.0;          // pinned variable: equality bound
    else if (at_lo) r = std::min(0.0, r); // gradient must point up at a lower bound
    else if (at_hi) r = std::max(0.0, r);
    stat = std::max(stat, std::abs(r) * scale(i));
  }
  // complementarity of the banded multipliers
  for (int i = 0; i < p.n_ineq; ++i)
    if (lam_full(i) > 0.0)
      stat = std::max(stat, lam_full(i) * std::min(std::abs(cin(i)), 1.0));

  if (lam_eq_out) *lam_eq_out = lam_eq;
  if (lam_in_out) *lam_in_out = lam_full;
  return stat;
}

// Newton-KKT polish: from a feasible, near-optimal iterate, take damped
// Newton steps on the KKT system with a finite-difference Hessian of the
// Lagrangian (the gradient itself is analytic). Active bounds enter as
// pinned directions; near-active inequalities as equality rows with a
// multiplier sign check.
struct PolishState {
  VectorXd x;
  double eviol = 0;
  double iviol = 0;
  double stat = 0;
  double viol() const { return std::max(eviol, iviol); }
};

PolishState kkt_polish(const NlpProblem& p, VectorXd x, const VectorXd& scale,
                       double tol_feas, double tol_stat, int max_iter,
                       bool verbose) {
  const int n = p.n;
  auto eval_all = [&](const VectorXd& xx, VectorXd& g, MatrixXd& Jeq, VectorXd& ceq,
                      MatrixXd& Jin, VectorXd& cin) {
    p.objective(xx, &g);
    if (p.n_eq > 0) p.eq(xx, ceq, &Jeq);
    else { ceq.resize(0); Jeq.resize(0, n); }
    if (p.n_ineq > 0) p.ineq(xx, cin, &Jin);
    else { cin.resize(0); Jin.resize(0, n); }
  };

  auto measures = [&](const VectorXd& xx, double& eviol, double& iviol,
                      double& stat) {
    VectorXd ceq, cin;
    if (p.n_eq > 0) p.eq(xx, ceq, nullptr);
    if (p.n_ineq > 0) p.ineq(xx, cin, nullptr);
    eviol = p.n_eq > 0 ? ceq.lpNorm<Eigen::Infinity>() : 0.0;
    iviol = 0.0;
    for (int i = 0; i < cin.size(); ++i) iviol = std::max(iviol, cin(i));
    stat = kkt_stationarity(p, xx, scale, nullptr, nullptr);
  };

  double tau = 1e-8;  // Levenberg damping on the Hessian block
  PolishState st;
  st.x = x;
  measures(st.x, st.eviol, st.iviol, st.stat);

  for (int iter = 0; iter < max_iter; ++iter) {
    if (st.viol() < tol_feas && st.stat < tol_stat) break;

    VectorXd g, ceq, cin;
    MatrixXd Jeq, Jin;
    eval_all(st.x, g, Jeq, ceq, Jin, cin);

    // multipliers for the Hessian (least squares at the current point)
    VectorXd lam_eq, lam_in;
    kkt_stationarity(p, st.x, scale, &lam_eq, &lam_in);

    // active sets: violated rows, plus near-boundary rows whose multiplier
    // wants to hold them there
    std::vector<int> act_in;
    for (int i = 0; i < p.n_ineq; ++i)
      if (cin(i) > 1e-10 || (cin(i) > -1e-7 && lam_in(i) > 0.0))
        act_in.push_back(i);
    std::vector<int> at_lo, at_hi;
    for (int i = 0; i < n; ++i) {
      if (st.x(i) <= p.lower(i) + 1e-12) at_lo.push_back(i);
      else if (st.x(i) >= p.upper(i) - 1e-12) at_hi.push_back(i);
    }

    auto grad_lagrangian = [&](const VectorXd& xx) {
      VectorXd gg, cc;
      p.objective(xx, &gg);
      if (p.n_eq > 0) {
        MatrixXd J;
        p.eq(xx, cc, &J);
        gg.noalias() += J.transpose() * lam_eq;
      }
      if (p.n_ineq > 0) {
        MatrixXd J;
        p.ineq(xx, cc, &J);
        gg.noalias() += J.transpose() * lam_in;
      }
      return gg;
    };

    // finite-difference Hessian of the Lagrangian (central, symmetrized)
    MatrixXd H(n, n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-5 * std::max(1.0, scale(j));
      VectorXd xp = st.x, xm = st.x;
      xp(j) += h;
      xm(j) -= h;
      H.col(j) = (grad_lagrangian(xp) - grad_lagrangian(xm)) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();

    bool stepped = false;
    for (int attempt = 0; attempt < 10 && !stepped; ++attempt) {
      // QP subproblem with add/drop pivoting over the linearized
      // inequalities: solve the equality-constrained step with the working
      // set, add the most violated linearized row, drop rows whose
      // multiplier turns negative, repeat until consistent.
      std::vector<int> W = act_in;
      std::vector<char> inW(p.n_ineq, 0);
      for (int i : W) inW[i] = 1;
      VectorXd d = VectorXd::Zero(n);
      bool qp_ok = false;
      for (int pivot = 0; pivot < 80; ++pivot) {
        const int m_rows = p.n_eq + static_cast<int>(W.size()) +
                           static_cast<int>(at_lo.size()) +
                           static_cast<int>(at_hi.size());
        MatrixXd K(n + m_rows, n + m_rows);
        K.setZero();
        K.topLeftCorner(n, n) = H + tau * MatrixXd::Identity(n, n);
        VectorXd rhs(n + m_rows);
        rhs.setZero();
        rhs.head(n) = -g;
        int r = n;
        auto add_row = [&](const Eigen::RowVectorXd& row, double rhs_val) {
          K.block(r, 0, 1, n) = row;
          K.block(0, r, n, 1) = row.transpose();
          rhs(r) = rhs_val;
          ++r;
        };
        for (int j = 0; j < p.n_eq; ++j) add_row(Jeq.row(j), -ceq(j));
        for (int idx : W) add_row(Jin.row(idx), -cin(idx));
        for (int i : at_lo) {
          Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
          e(i) = 1.0;
          add_row(e, 0.0);
        }
        for (int i : at_hi) {
          Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
          e(i) = 1.0;
          add_row(e, 0.0);
        }

        Eigen::PartialPivLU<MatrixXd> lu(K);
        const VectorXd sol = lu.solve(rhs);
        if (!sol.allFinite()) break;
        d = sol.head(n);
        const VectorXd lamW = sol.segment(n + p.n_eq, W.size());

        // most violated linearized non-working row
        int worst = -1;
        double worst_v = 1e-9;
        for (int i = 0; i < p.n_ineq; ++i) {
          if (inW[i]) continue;
          const double v = cin(i) + Jin.row(i).dot(d);
          if (v > worst_v) {
            worst_v = v;
            worst = i;
          }
        }
        if (worst >= 0) {
          W.push_back(worst);
          inW[worst] = 1;
          continue;
        }
        // drop the most negative multiplier among satisfied working rows
        int drop = -1;
        double most_neg = -1e-9;
        for (size_t j = 0; j < W.size(); ++j) {
          if (cin(W[j]) > 1e-10) continue;  // violated rows must be repaired
          if (lamW(j) < most_neg) {
            most_neg = lamW(j);
            drop = static_cast<int>(j);
          }
        }
        if (drop >= 0) {
          inW[W[drop]] = 0;
          W.erase(W.begin() + drop);
          continue;
        }
        qp_ok = true;
        break;
      }
      if (!qp_ok && d.lpNorm<Eigen::Infinity>() == 0.0) {
        tau *= 30.0;
        if (tau > 1e8) break;
        continue;
      }

      // line search on the exact l1 penalty merit (QP steps descend it)
      VectorXd lam_eq_qp, lam_in_qp;
      kkt_stationarity(p, st.x, scale, &lam_eq_qp, &lam_in_qp);
      double rho = 10.0;
      if (p.n_eq > 0) rho = std::max(rho, 2.0 * lam_eq_qp.lpNorm<Eigen::Infinity>());
      if (p.n_ineq > 0) rho = std::max(rho, 2.0 * lam_in_qp.lpNorm<Eigen::Infinity>());
      auto merit = [&](const VectorXd& xx) {
        VectorXd ce, ci;
        double v = p.objective(xx, nullptr);
        if (p.n_eq > 0) {
          p.eq(xx, ce, nullptr);
          v += rho * ce.lpNorm<1>();
        }
        if (p.n_ineq > 0) {
          p.ineq(xx, ci, nullptr);
          for (int i = 0; i < ci.size(); ++i) v += rho * std::max(0.0, ci(i));
        }
        return v;
      };
      const double phi0 = merit(st.x);
      double alpha = 1.0;
      if (verbose) {
        const VectorXd x1 = project(st.x + d, p.lower, p.upper);
        double e1, i1, s1;
        measures(x1, e1, i1, s1);
        std::cerr << "  qp tau=" << tau << " |d|=" << d.lpNorm<Eigen::Infinity>()
                  << " full-step e=" << e1 << " i=" << i1 << " s=" << s1
                  << " phi0=" << phi0 << " phi1=" << merit(x1) << "\n";
      }
      for (int ls = 0; ls < 14; ++ls) {
        const VectorXd xc = project(st.x + alpha * d, p.lower, p.upper);
        const double phic = merit(xc);
        if (std::isfinite(phic) &&
            phic < phi0 - 1e-10 * std::max(1.0, std::abs(phi0)) * alpha) {
          double e2, i2, s2;
          measures(xc, e2, i2, s2);
          st.x = xc;
          st.eviol = e2;
          st.iviol = i2;
          st.stat = s2;
          stepped = true;
          tau = std::max(1e-10, tau * 0.3);
          break;
        }
        alpha *= 0.5;
      }
      if (!stepped) tau *= 30.0;
      if (tau > 1e8) break;
    }
    if (verbose)
      std::cerr << "polish " << iter << " viol=" << st.viol() << " stat=" << st.stat
                << " tau=" << tau << "\n";
    if (!stepped) break;
  }
  return st;
}

// Reduced-space polish: restore feasibility exactly with Newton steps on the
// active rows, then run BFGS on the objective inside the constraint null
// space. Learns the curvature of nearly flat arcs from exact gradients,
// which the finite-difference KKT Hessian cannot resolve.
PolishState reduced_polish(const NlpProblem& p, VectorXd x, const VectorXd& scale,
                           double tol_feas, double tol_stat, int max_rounds,
                           bool verbose) {
  const int n = p.n;

  auto eval_c = [&](const VectorXd& xx, VectorXd& ceq, VectorXd& cin) {
    if (p.n_eq > 0) p.eq(xx, ceq, nullptr);
    else ceq.resize(0);
    if (p.n_ineq > 0) p.ineq(xx, cin, nullptr);
    else cin.resize(0);
  };

  PolishState st;
  st.x = x;

  std::vector<int> act_in;      // inequality rows treated as equalities
  {
    VectorXd ceq, cin;
    eval_c(st.x, ceq, cin);
    VectorXd lam_in;
    kkt_stationarity(p, st.x, scale, nullptr, &lam_in);
    for (int i = 0; i < p.n_ineq; ++i)
      if (cin(i) > -1e-6 && (cin(i) > -1e-10 || lam_in(i) > 0.0))
        act_in.push_back(i);
  }

  for (int round = 0; round < max_rounds; ++round) {
    // active bounds
    std::vector<int> at_lo, at_hi;
    for (int i = 0; i < n; ++i) {
      if (st.x(i) <= p.lower(i) + 1e-11) at_lo.push_back(i);
      else if (st.x(i) >= p.upper(i) - 1e-11) at_hi.push_back(i);
    }
    const int m_act =
        p.n_eq + static_cast<int>(act_in.size()) +
        static_cast<int>(at_lo.size()) + static_cast<int>(at_hi.size());

    auto active_rows = [&](const VectorXd& xx, VectorXd& c_act, MatrixXd* A) {
      VectorXd ceq, cin;
      MatrixXd Jeq, Jin;
      if (p.n_eq > 0) p.eq(xx, ceq, A ? &Jeq : nullptr);
      if (p.n_ineq > 0) p.ineq(xx, cin, A ? &Jin : nullptr);
      c_act.resize(m_act);
      if (A) A->setZero(m_act, n);
      int r = 0;
      for (int j = 0; j < p.n_eq; ++j, ++r) {
        c_act(r) = ceq(j);
        if (A) A->row(r) = Jeq.row(j);
      }
      for (int idx : act_in) {
        c_act(r) = cin(idx);
        if (A) A->row(r) = Jin.row(idx);
        ++r;
      }
      for (int i : at_lo) {
        c_act(r) = st.x(i) - p.lower(i) + (xx(i) - st.x(i));
        if (A) (*A)(r, i) = 1.0;
        ++r;
      }
      for (int i : at_hi) {
        c_act(r) = st.x(i) - p.upper(i) + (xx(i) - st.x(i));
        if (A) (*A)(r, i) = 1.0;
        ++r;
      }
    };

    // Newton restoration onto the active manifold
    auto restore = [&](VectorXd xx, bool& ok) {
      ok = false;
      for (int it = 0; it < 8; ++it) {
        VectorXd c_act;
        MatrixXd A;
        active_rows(xx, c_act, &A);
        if (c_act.lpNorm<Eigen::Infinity>() < 1e-11) {
          ok = true;
          break;
        }
        const MatrixXd AAt =
            A * A.transpose() + 1e-12 * MatrixXd::Identity(m_act, m_act);
        xx -= A.transpose() * AAt.ldlt().solve(c_act);
      }
      return xx;
    };

    bool ok = false;
    VectorXd xr = restore(st.x, ok);
    if (ok) st.x = xr;

    // null-space basis of the active Jacobian
    VectorXd c_act;
    MatrixXd A;
    active_rows(st.x, c_act, &A);
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
    int rank = 0;
    const auto& sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-10 * std::max(1.0, sv(0))) ++rank;
    const int k = n - rank;
    if (k <= 0) break;
    const MatrixXd Z = svd.matrixV().rightCols(k);

    // BFGS in the reduced coordinates
    MatrixXd B = MatrixXd::Identity(k, k);  // inverse Hessian approximation
    VectorXd g(n);
    double f = p.objective(st.x, &g);
    VectorXd gz = Z.transpose() * g;
    bool activity_changed = false;
    int iters = 0;
    for (; iters < 250; ++iters) {
      if ((scale.asDiagonal() * (Z * gz)).lpNorm<Eigen::Infinity>() <
          0.3 * tol_stat)
        break;
      VectorXd dz = -(B * gz);
      if (gz.dot(dz) > 0) dz = -gz;
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 30; ++ls) {
        bool rok = false;
        VectorXd xc = restore(st.x + Z * (alpha * dz), rok);
        if (rok) {
          // keep box bounds and inactive inequalities honest
          xc = project(xc, p.lower, p.upper);
          VectorXd ceq2, cin2;
          eval_c(xc, ceq2, cin2);
          double worst = -1e300;
          int worst_i = -1;
          for (int i = 0; i < p.n_ineq; ++i) {
            if (cin2(i) > worst) {
              worst = cin2(i);
              worst_i = i;
            }
          }
          const double fc = p.objective(xc, nullptr);
          const bool feas_ok = ceq2.lpNorm<Eigen::Infinity>() < 1e-9 &&
                               worst < 1e-9;
          if (feas_ok && std::isfinite(fc) &&
              fc <= f - 1e-12 * std::abs(f) - 1e-16) {
            const VectorXd g_old = gz;
            st.x = xc;
            f = p.objective(st.x, &g);
            gz = Z.transpose() * g;
            const VectorXd s = Z.transpose() * (Z * (alpha * dz));
            const VectorXd yv = gz - g_old;
            const double sy = s.dot(yv);
            if (sy > 1e-14) {
              const MatrixXd I = MatrixXd::Identity(k, k);
              const MatrixXd V = I - (s * yv.transpose()) / sy;
              B = V * B * V.transpose() + (s * s.transpose()) / sy;
            }
            accepted = true;
            break;
          }
          if (rok && worst >= 1e-9 && worst_i >= 0) {
            // a new inequality blocks this direction: activate it
            if (std::find(act_in.begin(), act_in.end(), worst_i) == act_in.end() &&
                alpha <= 1.0 / 64.0) {
              act_in.push_back(worst_i);
              activity_changed = true;
              break;
            }
          }
        }
        alpha *= 0.5;
      }
      if (activity_changed || !accepted) break;
    }
    if (verbose) {
      double e2, i2, s2;
      VectorXd ceq2, cin2;
      eval_c(st.x, ceq2, cin2);
      e2 = p.n_eq ? ceq2.lpNorm<Eigen::Infinity>() : 0;
      i2 = 0;
      for (int i = 0; i < cin2.size(); ++i) i2 = std::max(i2, cin2(i));
      s2 = kkt_stationarity(p, st.x, scale, nullptr, nullptr);
      std::cerr << "reduced round " << round << " iters " << iters << " viol="
                << std::max(e2, i2) << " stat=" << s2 << "\n";
    }

    if (!activity_changed) {
      // multiplier sign check: release rows that want to separate
      VectorXd lam_in;
      const double stat_now = kkt_stationarity(p, st.x, scale, nullptr, &lam_in);
      VectorXd ceq2, cin2;
      eval_c(st.x, ceq2, cin2);
      bool dropped = false;
      for (auto it = act_in.begin(); it != act_in.end();) {
        if (cin2(*it) > -1e-9 && lam_in(*it) <= 0.0 && stat_now > tol_stat) {
          it = act_in.erase(it);
          dropped = true;
        } else {
          ++it;
        }
      }
      if (!dropped) break;
    }
  }

  VectorXd ceq, cin;
  eval_c(st.x, ceq, cin);
  st.eviol = p.n_eq ? ceq.lpNorm<Eigen::Infinity>() : 0.0;
  st.iviol = 0.0;
  for (int i = 0; i < cin.size(); ++i) st.iviol = std::max(st.iviol, cin(i));
  st.stat = kkt_stationarity(p, st.x, scale, nullptr, nullptr);
  return st;
}

}  // namespace

NlpResult solve_nlp(const NlpProblem& p, const NlpOptions& opt) {
  NlpResult out;
  VectorXd x = project(p.x0, p.lower, p.upper);
  const VectorXd scale = p.scale.size() == p.n ? p.scale : VectorXd::Ones(p.n);

  AugLag al{p, VectorXd::Zero(p.n_eq), VectorXd::Zero(p.n_ineq), opt.mu0};
  double prev_viol = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    out.outer_iters = outer + 1;
    const double gtol = std::max(0.02 * opt.tol_stat,
                                 1e-3 * std::pow(0.25, outer));
    out.inner_iters +=
        minimize_inner(al, p, x, gtol, opt.max_inner, scale, opt.lbfgs_memory);

    VectorXd ceq(p.n_eq), cin(p.n_ineq);
    if (p.n_eq > 0) p.eq(x, ceq, nullptr);
    if (p.n_ineq > 0) p.ineq(x, cin, nullptr);

    const double eviol = p.n_eq > 0 ? ceq.lpNorm<Eigen::Infinity>() : 0.0;
    double iviol = 0.0;
    for (int i = 0; i < cin.size(); ++i) iviol = std::max(iviol, cin(i));
    const double viol = std::max(eviol, iviol);

    if (p.n_eq > 0) al.lam_eq += al.mu * ceq;
    for (int i = 0; i < cin.size(); ++i)
      al.lam_in(i) = std::max(0.0, al.lam_in(i) + al.mu * cin(i));

    const double stat = kkt_stationarity(p, x, scale, &out.lambda_eq,
                                         &out.lambda_ineq);
    out.max_eq_violation = eviol;
    out.max_ineq_violation = iviol;
    out.stationarity = stat;

    if (opt.verbose)
      std::cerr << "AL outer " << outer << " mu=" << al.mu << " viol=" << viol
                << " stat=" << stat << "\n";

    if (viol < opt.tol_feas && stat < opt.tol_stat) {
      out.converged = true;
      break;
    }
    // switch to the Newton-KKT polish once the iterate is essentially
    // feasible; the first-order loop has done its job by then
    if (viol < 1e-5 && outer >= 2) break;
    // grow the penalty only while feasibility is the blocker and stalls
    if (viol > std::max(opt.tol_feas, 0.25 * prev_viol))
      al.mu = std::min(opt.mu_max, al.mu * 5.0);
    prev_viol = viol;
  }

  if (!out.converged) {
    auto better = [&](double ev, double iv, double stt) {
      return std::max(std::max(ev, iv) / opt.tol_feas, stt / opt.tol_stat) <
             std::max(std::max(out.max_eq_violation, out.max_ineq_violation) /
                          opt.tol_feas,
                      out.stationarity / opt.tol_stat);
    };
    const PolishState st = kkt_polish(p, x, scale, opt.tol_feas, opt.tol_stat, 200,
                                      opt.verbose);
    if (better(st.eviol, st.iviol, st.stat)) {
      x = st.x;
      out.max_eq_violation = st.eviol;
      out.max_ineq_violation = st.iviol;
      out.stationarity = st.stat;
    }
    out.converged = out.max_eq_violation < opt.tol_feas &&
                    out.max_ineq_violation < opt.tol_feas &&
                    out.stationarity < opt.tol_stat;
    if (!out.converged) {
      const PolishState rp = reduced_polish(p, x, scale, opt.tol_feas,
                                            opt.tol_stat, 30, opt.verbose);
      if (better(rp.eviol, rp.iviol, rp.stat)) {
        x = rp.x;
        out.max_eq_violation = rp.eviol;
        out.max_ineq_violation = rp.iviol;
        out.stationarity = rp.stat;
      }
      out.converged = out.max_eq_violation < opt.tol_feas &&
                      out.max_ineq_violation < opt.tol_feas &&
                      out.stationarity < opt.tol_stat;
    }
    kkt_stationarity(p, x, scale, &out.lambda_eq, &out.lambda_ineq);
  }

  out.x = x;
  out.objective = p.objective(x, nullptr);
  if (!out.converged)
    out.message = "augmented-Lagrangian budget exhausted before tolerances met";
  return out;
}

}  // namespace hopper
