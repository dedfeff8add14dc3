#pragma once

#include <Eigen/Dense>

#include "krri/kernels.hpp"
#include "krri/types.hpp"

namespace krri {

/// OLS on responders: intercept plus one slope per covariate.
struct LinearModel {
  Eigen::VectorXd coefficients;  // [intercept, slopes...]
};

LinearModel fit_linear(const LabeledSample& sample);
Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& X);

/// Additive cubic B-spline regression on scaled [0,1] coordinates with a
/// global intercept. The first basis function of each coordinate is dropped
/// to keep the design identifiable alongside the intercept.
struct BSplineModel {
  InputScaler scaler;
  int interior_knots = 3;
  Eigen::VectorXd coefficients;  // [intercept, per-coordinate blocks...]
  bool ridged = false;  // least squares fell back to a small ridge
};

BSplineModel fit_bspline(const LabeledSample& sample, int interior_knots = 3);
Eigen::VectorXd predict(const BSplineModel& model, const Eigen::MatrixXd& X);

/// Full cubic B-spline basis on [0,1] with the given number of equispaced
/// interior knots (clamped ends); returns interior_knots + 4 values that sum
/// to one at every t in [0,1].
Eigen::VectorXd bspline_basis(double t, int interior_knots);

/// Imputation estimator using precomputed predictions at every sample row.
double impute_from_predictions(const LabeledSample& sample, const Eigen::VectorXd& m_hat);

double impute_with(const LinearModel& model, const LabeledSample& sample);
double impute_with(const BSplineModel& model, const LabeledSample& sample);

/// Diagnostic for binary responses: predictions leaving [0,1] at the rows
/// they are imputed to.
int count_out_of_unit_interval(const Eigen::VectorXd& predictions);

}  // namespace krri
