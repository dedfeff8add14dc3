#pragma once

#include <Eigen/Dense>
#include <functional>

namespace krri {

enum class SolveMethod { Cholesky, LdltFallback };

struct SolveReport {
  Eigen::VectorXd solution;
  double residual_norm = 0.0;
  SolveMethod method = SolveMethod::Cholesky;
};

/// Solves (M + ridge*I) x = b for symmetric positive definite M + ridge*I.
/// Tries Cholesky first, falls back to LDLT; the accepted solution must
/// satisfy ||residual|| <= 1e-8 * (1 + ||b||), else NumericalSingularity.
SolveReport solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                      double ridge = 0.0);

struct OptimOptions {
  double gtol = 1e-8;  // scaled by (1 + |f(x0)|)
  int max_iter = 500;
  int memory = 10;
  double armijo_c = 1e-4;
};

struct OptimResult {
  Eigen::VectorXd minimizer;
  double objective_value = 0.0;
  double gradient_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  double gtol_used = 0.0;
};

/// Objective callback: returns f(x) and fills grad (resized by the callee).
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with Armijo backtracking (halving steps).
/// Accepted iterates never increase the objective. Throws NonFiniteObjective
/// if the callback produces a non-finite value or gradient.
OptimResult minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                     const OptimOptions& opts = {});

/// Standard normal quantile, accurate to better than 1e-8 on (0,1).
double norm_quantile(double p);

/// Central finite differences (f(x+h e_i) - f(x-h e_i)) / (2h).
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h);

/// Root of f on [lo, hi] by bisection; requires a sign change.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double xtol = 1e-12, int max_iter = 200);

}  // namespace krri
