#pragma once

// Small dense NLP solver: augmented Lagrangian over equality and inequality
// constraints with a box-projected L-BFGS inner loop. The transcription in
// trajopt targets this interface; any general NLP solver can be swapped in
// behind it.

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace hopper {

struct NlpProblem {
  int n = 0;
  Eigen::VectorXd lower, upper;  // box bounds (use +-inf for free)
  Eigen::VectorXd x0;
  Eigen::VectorXd scale;  // typical variable magnitudes; empty = ones

  // f(x); fills grad when non-null
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> objective;

  int n_eq = 0;   // c_eq(x) = 0
  int n_ineq = 0; // c_ineq(x) <= 0
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)> eq;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)> ineq;
};

struct NlpOptions {
  int max_outer = 60;
  int max_inner = 2500;
  double tol_feas = 1e-8;
  double tol_stat = 1e-8;
  double mu0 = 1e3;
  double mu_max = 1e9;
  int lbfgs_memory = 25;
  bool verbose = false;
};

struct NlpResult {
  Eigen::VectorXd x;
  double objective = 0;
  double max_eq_violation = 0;
  double max_ineq_violation = 0;
  double stationarity = 0;  // projected KKT gradient, infinity norm
  bool converged = false;
  int outer_iters = 0;
  int inner_iters = 0;
  std::string message;
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_ineq;
};

NlpResult solve_nlp(const NlpProblem& p, const NlpOptions& opt = {});

}  // namespace hopper
