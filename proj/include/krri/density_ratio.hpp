#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "krri/kernels.hpp"
#include "krri/numerics.hpp"
#include "krri/types.hpp"

namespace krri {

/// Penalized maximum-entropy density ratio g(x) = f(x | delta=0) / f(x | delta=1),
/// represented as g(x) = exp{alpha0 + sum_j alpha_j K(x, x_j)} over all
/// training covariates.
struct DensityRatioModel {
  KernelSpec spec;
  InputScaler scaler;
  Eigen::MatrixXd support_points;  // all training covariates, raw
  double alpha0 = 0.0;
  Eigen::VectorXd alpha;
  double tau = 0.0;
  int n0 = 0;
  int n1 = 0;
  /// Exponent clamp (at 700) was active at the accepted optimum.
  bool nonfinite_risk = false;

  /// Degenerate full-response model: g = 1 and omega = 1 everywhere.
  static DensityRatioModel unit(const KernelSpec& spec, const LabeledSample& sample);
};

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd gradient;  // length n+1: [d/d alpha0; d/d alpha]
};

/// Empirical maximum-entropy risk plus tau * alpha' K alpha, with the
/// analytic gradient. Exponents are clamped at 700 to stay finite.
ObjectiveEval dr_objective(const LabeledSample& sample, const KernelSpec& spec,
                           double tau, double alpha0, const Eigen::VectorXd& alpha);

struct DensityRatioOptions {
  OptimOptions optim{.gtol = 1e-5, .max_iter = 150};
};

/// Minimizes the objective from zero initialization, then re-normalizes
/// alpha0 in closed form so the responder-sum constraint holds exactly.
DensityRatioModel fit_ratio(const LabeledSample& sample, const KernelSpec& spec,
                            double tau, const DensityRatioOptions& opts = {});

/// Closed-form normalizing constant:
/// alpha0 = log n1 - log sum_{i: delta=1} exp{sum_j alpha_j K(x_i, x_j)}.
double normalize_alpha0(const LabeledSample& sample, const KernelSpec& spec,
                        const Eigen::VectorXd& alpha);

double g_hat(const DensityRatioModel& model, const Eigen::VectorXd& x);

/// omega(x) = 1 + (n0/n1) g(x); always >= 1, and exactly 1 when n0 = 0.
double omega(const DensityRatioModel& model, const Eigen::VectorXd& x);

Eigen::VectorXd omega_values(const DensityRatioModel& model, const Eigen::MatrixXd& X);
Eigen::VectorXd g_values(const DensityRatioModel& model, const Eigen::MatrixXd& X);

struct TauSelection {
  double tau = 0.0;
  Eigen::VectorXd cv_scores;  // aligned with the grid
};

/// Held-out index sets: each stratum (by delta) is shuffled with a seeded
/// Fisher-Yates and dealt round-robin, so per-stratum fold sizes differ by
/// at most one.
std::vector<std::vector<int>> stratified_folds(const Eigen::VectorXi& delta, int k_folds,
                                               std::uint64_t seed);

/// Stratified K-fold cross-validation for tau. Folds are built per stratum
/// (by delta) with a seeded shuffle and near-equal sizes; the held-out loss
/// is the 0/1 classification loss of p_hat = 1 / omega_hat against delta.
/// Ties resolve toward larger tau.
TauSelection cv_select_tau(const LabeledSample& sample, const KernelSpec& spec,
                           const std::vector<double>& grid, int k_folds,
                           std::uint64_t seed, int threads = 1,
                           const DensityRatioOptions& opts = {});

/// 20 log-spaced points on [1e-6, 1e2].
std::vector<double> default_tau_grid();

}  // namespace krri
