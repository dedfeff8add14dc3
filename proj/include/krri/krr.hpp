#pragma once

#include <Eigen/Dense>
#include <vector>

#include "krri/kernels.hpp"
#include "krri/types.hpp"

namespace krri {

/// Fitted kernel ridge regression: m(x) = sum_j alpha_j K(x, s_j) over the
/// responder support points.
struct KrrModel {
  KernelSpec spec;
  InputScaler scaler;
  Eigen::MatrixXd support_points;  // responder covariates, raw
  Eigen::VectorXd coefficients;    // one per responder
  double lambda = 0.0;
};

/// Solves (K_rr + lambda I) alpha = y_r on the responder submatrix; this is
/// equivalent on responder coordinates to the full-system formulation with
/// the diagonal response-indicator matrix.
KrrModel fit_krr(const LabeledSample& sample, const KernelSpec& spec, double lambda);

Eigen::VectorXd predict(const KrrModel& model, const Eigen::MatrixXd& X_new);

enum class GcvVariant { PaperLinearTrace, SquaredTrace };

/// Generalized cross-validation score. PaperLinearTrace divides the mean
/// squared residual by the (linear) normalized trace; SquaredTrace squares
/// the denominator bracket.
double gcv_score(const LabeledSample& sample, const KernelSpec& spec, double lambda,
                 GcvVariant variant);

struct LambdaSelection {
  double lambda = 0.0;
  Eigen::VectorXd scores;  // aligned with the grid; NaN where degenerate
};

/// Grid element minimizing the GCV score; ties resolved toward smaller
/// lambda. Throws if every score is non-finite.
LambdaSelection select_lambda(const LabeledSample& sample, const KernelSpec& spec,
                              const std::vector<double>& grid, GcvVariant variant);

/// theta_hat = n^-1 sum_i { delta_i y_i + (1 - delta_i) m(x_i) }.
double impute_estimate(const LabeledSample& sample, const KrrModel& model);

/// 30 log-spaced points spanning [1e-6 * n^{1-l} * n, 1e2 * n], always
/// including the theoretical anchor n^{1-l}.
std::vector<double> default_lambda_grid(int n, int order);

}  // namespace krri
