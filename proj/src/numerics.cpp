#include "krri/numerics.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "krri/errors.hpp"

namespace krri {

SolveReport solve_spd(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                      double ridge) {
  if (M.rows() != M.cols()) throw InvalidArgument("solve_spd: matrix must be square");
  if (M.rows() != b.size()) throw InvalidArgument("solve_spd: size mismatch");
  if (ridge < 0.0) throw InvalidArgument("solve_spd: ridge must be >= 0");

  Eigen::MatrixXd A = M;
  A.diagonal().array() += ridge;
  const double tol = 1e-8 * (1.0 + b.norm());

  SolveReport report;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    report.solution = llt.solve(b);
    report.residual_norm = (A * report.solution - b).norm();
    report.method = SolveMethod::Cholesky;
    if (report.residual_norm <= tol) return report;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() == Eigen::Success) {
    report.solution = ldlt.solve(b);
    report.residual_norm = (A * report.solution - b).norm();
    report.method = SolveMethod::LdltFallback;
    if (report.residual_norm <= tol) return report;
  }
  throw NumericalSingularity("solve_spd: factorization failed or residual above tolerance");
}

namespace {

struct LbfgsPair {
  Eigen::VectorXd s, y;
  double rho;
};

void check_finite(double f, const Eigen::VectorXd& g) {
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NonFiniteObjective("minimize: non-finite objective or gradient");
  }
}

}  // namespace

OptimResult minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                     const OptimOptions& opts) {
  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(x.size());
  double fx = f(x, g);
  check_finite(fx, g);

  OptimResult result;
  result.gtol_used = opts.gtol * (1.0 + std::abs(fx));

  std::deque<LbfgsPair> history;
  double gamma = 1.0;  // scaling of the initial inverse Hessian

  Eigen::VectorXd direction(x.size()), x_new(x.size()), g_new(x.size());
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    double gnorm = g.cwiseAbs().maxCoeff();
    if (gnorm <= result.gtol_used) {
      result.converged = true;
      break;
    }

    // Two-loop recursion.
    direction = -g;
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
      alpha[i] = history[i].rho * history[i].s.dot(direction);
      direction -= alpha[i] * history[i].y;
    }
    direction *= gamma;
    for (std::size_t i = 0; i < history.size(); ++i) {
      double beta = history[i].rho * history[i].y.dot(direction);
      direction += (alpha[i] - beta) * history[i].s;
    }

    double descent = g.dot(direction);
    if (!(descent < 0.0)) {
      direction = -g;
      descent = g.dot(direction);
    }

    double step = 1.0;
    double f_new = fx;
    bool accepted = false;
    while (step > 1e-20) {
      x_new = x + step * direction;
      f_new = f(x_new, g_new);
      check_finite(f_new, g_new);
      if (f_new <= fx + opts.armijo_c * step * descent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step collapsed; no further progress possible

    LbfgsPair pair;
    pair.s = x_new - x;
    pair.y = g_new - g;
    double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      pair.rho = 1.0 / sy;
      gamma = sy / pair.y.squaredNorm();
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
    }
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
  }

  result.minimizer = x;
  result.objective_value = fx;
  result.gradient_inf_norm = g.cwiseAbs().maxCoeff();
  result.iterations = iter;
  if (result.gradient_inf_norm <= result.gtol_used) result.converged = true;
  return result;
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("norm_quantile: p must be in (0,1)");

  // Acklam's rational approximation, then one Halley refinement with erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double sqrt2 = 1.4142135623730950488;
  const double sqrt_2pi = 2.5066282746310005024;
  double e = 0.5 * std::erfc(-x / sqrt2) - p;
  double u = e * sqrt_2pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_gradient: h must be > 0");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

double bisect(const std::function<double(double)>& f, double lo, double hi,
              double xtol, int max_iter) {
  if (!(lo < hi)) throw InvalidArgument("bisect: requires lo < hi");
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw InvalidArgument("bisect: no sign change on [lo, hi]");
  for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace krri
