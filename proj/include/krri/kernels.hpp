#pragma once

#include <Eigen/Dense>
#include <string>

namespace krri {

enum class KernelFamily { Sobolev, Gaussian };

/// Sign applied to the k_{2l}(|x-y|) term of the Sobolev kernel.
/// PaperSign is (-1)^l, StandardSign is (-1)^{l-1}.
enum class SobolevSign { PaperSign, StandardSign };

struct KernelSpec {
  KernelFamily family = KernelFamily::Sobolev;
  int order = 2;         // Sobolev order l >= 1
  double bandwidth = 0;  // Gaussian only, > 0
  SobolevSign sign = SobolevSign::StandardSign;

  void validate() const;
  std::string summary() const;

  /// Sobolev spec with the sign convention picked by resolve_sign_convention.
  static KernelSpec sobolev(int order);
  static KernelSpec gaussian(double bandwidth);
};

/// Bernoulli polynomial B_q(x), 0 <= q <= 8.
double bernoulli_poly(int q, double x);

/// Univariate Sobolev reproducing kernel on [0,1]; throws KernelDomainError
/// if an input is outside the domain (that signals a scaler bug upstream).
double sobolev_kernel(int order, double x, double y, SobolevSign sign);

double gaussian_kernel(double bandwidth, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y);

/// Maps raw covariates onto the kernel domain [0,1] per coordinate using
/// training min/max; out-of-range prediction points are clamped.
class InputScaler {
 public:
  InputScaler() = default;

  static InputScaler fit(const Eigen::MatrixXd& X);

  Eigen::MatrixXd scale(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd scale_point(const Eigen::VectorXd& x) const;

  int dim() const { return static_cast<int>(lo_.size()); }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }

 private:
  Eigen::VectorXd lo_, hi_;
};

/// Kernel value between two already-scaled points. Multivariate Sobolev is
/// the coordinate-wise product of univariate kernels.
double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& sx,
                    const Eigen::VectorXd& sy);

struct GramMatrix {
  Eigen::MatrixXd values;
  bool square = false;  // built from a single point set

  /// Square case only: min eigenvalue must be >= -1e-8 * max |eigenvalue|.
  /// Throws NotPositiveSemidefinite on violation.
  void check_psd() const;
};

/// Gram of kernel evaluations K(scale(A_i), scale(B_j)); rows index A.
GramMatrix gram(const KernelSpec& spec, const InputScaler& scaler,
                const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Symmetric Gram over one point set (computes one triangle and mirrors).
GramMatrix gram_square(const KernelSpec& spec, const InputScaler& scaler,
                       const Eigen::MatrixXd& A);

/// Evaluates both sign conventions on a fixed 50-point grid and returns the
/// one whose Gram passes the PSD tolerance (StandardSign preferred on a tie).
SobolevSign resolve_sign_convention(int order);

/// Median of pairwise Euclidean distances between scaled points.
double median_heuristic_bandwidth(const Eigen::MatrixXd& scaled_points);

}  // namespace krri
