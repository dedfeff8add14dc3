#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "krri/density_ratio.hpp"
#include "krri/krr.hpp"
#include "krri/types.hpp"

namespace krri {

/// Influence values eta_i = m(x_i) + delta_i * omega_i * (y_i - m(x_i)).
/// Non-respondents contribute m(x_i) only; their y placeholder is not read.
Eigen::VectorXd influence_values(const LabeledSample& sample,
                                 const Eigen::VectorXd& m_hat,
                                 const Eigen::VectorXd& omega_hat);

Eigen::VectorXd influence_values(const LabeledSample& sample, const KrrModel& krr_model,
                                 const DensityRatioModel& ratio_model);

/// V = 1/n * 1/(n-1) * sum (eta_i - eta_bar)^2; requires n >= 2.
double variance_estimate(const Eigen::VectorXd& eta);

/// theta_hat -/+ z_{(1+level)/2} * sqrt(variance_hat).
std::pair<double, double> confidence_interval(double theta_hat, double variance_hat,
                                              double level);

struct ImputationOptions {
  KernelSpec spec;  // defaults to Sobolev order 2 with the validated sign
  GcvVariant gcv = GcvVariant::SquaredTrace;
  std::vector<double> lambda_grid;  // empty: default grid for (n, order)
  std::vector<double> tau_grid;     // empty: default grid
  int k_folds = 5;
  std::vector<double> levels = {0.90, 0.95};
  std::uint64_t seed = 0;
  double c_min = 0.01;  // propensity lower-bound diagnostic threshold
  int threads = 1;
  DensityRatioOptions ratio;

  ImputationOptions();
};

struct ImputationReport {
  double theta_hat = 0.0;
  double variance_hat = 0.0;
  double std_error = 0.0;
  std::map<double, std::pair<double, double>> ci;  // level -> (lower, upper)
  int n = 0, n1 = 0, n0 = 0;
  double lambda = 0.0;
  double tau = 0.0;  // 0 when the ratio fit was skipped (no missing rows)
  double max_omega = 1.0;
  bool omega_warning = false;   // max omega exceeded 1 / c_min
  bool ratio_clamped = false;   // exponent clamp active at the ratio optimum
  std::string gcv_variant;
  std::string kernel;
};

/// Full report plus the fitted values needed by callers.
struct PipelineResult {
  ImputationReport report;
  Eigen::VectorXd m_hat;      // KRR predictions at every sample point
  Eigen::VectorXd omega_hat;  // estimated inverse propensities at every point
  Eigen::VectorXd lambda_scores;
  Eigen::VectorXd tau_scores;
};

/// End-to-end imputation: GCV-selected KRR fit, CV-selected density ratio,
/// influence-function variance and confidence intervals. Deterministic for
/// fixed inputs, seed and grids, independent of the thread count.
PipelineResult impute_with_inference(const LabeledSample& sample,
                                     const ImputationOptions& options);

}  // namespace krri
