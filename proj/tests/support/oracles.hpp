#pragma once

// Independent dense-matrix oracles used by the tests. These deliberately
// follow the printed full-system formulas with explicit inverses rather
// than the library's solver paths.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "krri/kernels.hpp"
#include "krri/krr.hpp"
#include "krri/types.hpp"

namespace oracle {

inline Eigen::MatrixXd delta_matrix(const krri::LabeledSample& sample) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(sample.n(), sample.n());
  for (int i = 0; i < sample.n(); ++i) D(i, i) = sample.delta[i];
  return D;
}

/// Full-system coefficients (Delta K + lambda I)^{-1} Delta y by dense inverse.
inline Eigen::VectorXd full_system_alpha(const krri::LabeledSample& sample,
                                         const krri::KernelSpec& spec, double lambda) {
  krri::InputScaler scaler = krri::InputScaler::fit(sample.X);
  Eigen::MatrixXd K = krri::gram_square(spec, scaler, sample.X).values;
  Eigen::MatrixXd D = delta_matrix(sample);
  Eigen::MatrixXd M = D * K + lambda * Eigen::MatrixXd::Identity(sample.n(), sample.n());
  Eigen::VectorXd masked_y(sample.n());
  for (int i = 0; i < sample.n(); ++i) masked_y[i] = sample.delta[i] == 1 ? sample.y[i] : 0.0;
  return M.inverse() * masked_y;
}

inline Eigen::VectorXd full_system_predict(const krri::LabeledSample& sample,
                                           const krri::KernelSpec& spec, double lambda,
                                           const Eigen::MatrixXd& X_new) {
  krri::InputScaler scaler = krri::InputScaler::fit(sample.X);
  Eigen::MatrixXd G = krri::gram(spec, scaler, X_new, sample.X).values;
  return G * full_system_alpha(sample, spec, lambda);
}

/// GCV exactly as printed, on the full n x n system with dense inverses.
inline double gcv_dense(const krri::LabeledSample& sample, const krri::KernelSpec& spec,
                        double lambda, krri::GcvVariant variant) {
  krri::InputScaler scaler = krri::InputScaler::fit(sample.X);
  Eigen::MatrixXd K = krri::gram_square(spec, scaler, sample.X).values;
  Eigen::MatrixXd D = delta_matrix(sample);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sample.n(), sample.n());
  Eigen::MatrixXd A = D * K * (D * K + lambda * I).inverse() * D;
  Eigen::VectorXd masked_y(sample.n());
  for (int i = 0; i < sample.n(); ++i) masked_y[i] = sample.delta[i] == 1 ? sample.y[i] : 0.0;
  double num = ((D - A) * masked_y).squaredNorm() / sample.n();
  double den = (D - A).trace() / sample.n();
  if (variant == krri::GcvVariant::PaperLinearTrace) return num / den;
  return num / (den * den);
}

/// Two-dimensional grid search for a scalar function; returns the minimum value.
inline double grid_search_2d(const std::function<double(double, double)>& f, double lo,
                             double hi, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      double a = lo + (hi - lo) * i / steps;
      double b = lo + (hi - lo) * j / steps;
      best = std::min(best, f(a, b));
    }
  }
  return best;
}

/// Nodes and weights of the Gauss-Legendre rule on [a, b].
inline void gauss_legendre(int points, double a, double b, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  nodes.resize(static_cast<std::size_t>(points));
  weights.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    // Newton iteration from the Chebyshev initial guess.
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (points + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= points; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = points * (x * p1 - p0) / (x * x - 1.0);
      double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= points; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = points * (x * p1 - p0) / (x * x - 1.0);
    nodes[static_cast<std::size_t>(i)] = 0.5 * (a + b) + 0.5 * (b - a) * x;
    weights[static_cast<std::size_t>(i)] = (b - a) / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace oracle
