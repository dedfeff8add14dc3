#pragma once

#include <Eigen/Dense>
#include <vector>

namespace krri {

/// Covariates with a partially observed response. y entries are meaningful
/// only where delta = 1; estimation code must never read the others.
struct LabeledSample {
  Eigen::MatrixXd X;      // n x d, fully observed
  Eigen::VectorXd y;      // length n
  Eigen::VectorXi delta;  // length n, 0/1 response indicators

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
  int n1() const { return delta.sum(); }
  int n0() const { return n() - n1(); }

  std::vector<int> responder_indices() const;
  std::vector<int> nonresponder_indices() const;

  /// Rows of X at the given indices.
  Eigen::MatrixXd rows(const std::vector<int>& idx) const;

  /// Sub-sample restricted to the given rows (keeps y placeholders).
  LabeledSample subset(const std::vector<int>& idx) const;

  /// Throws unless n >= 2, d >= 1, at least one responder, consistent sizes,
  /// delta in {0,1}, and y finite wherever delta = 1.
  void validate() const;
};

}  // namespace krri
