#include "krri/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "krri/errors.hpp"

namespace krri {

namespace {

// B_q coefficients, highest degree first, from B_q(x) = sum_k C(q,k) b_k x^{q-k}.
constexpr int kMaxBernoulliOrder = 8;
const std::array<std::vector<double>, kMaxBernoulliOrder + 1> kBernoulliCoeffs = {{
    {1.0},
    {1.0, -0.5},
    {1.0, -1.0, 1.0 / 6.0},
    {1.0, -1.5, 0.5, 0.0},
    {1.0, -2.0, 1.0, 0.0, -1.0 / 30.0},
    {1.0, -2.5, 5.0 / 3.0, 0.0, -1.0 / 6.0, 0.0},
    {1.0, -3.0, 2.5, 0.0, -0.5, 0.0, 1.0 / 42.0},
    {1.0, -3.5, 3.5, 0.0, -7.0 / 6.0, 0.0, 1.0 / 6.0, 0.0},
    {1.0, -4.0, 14.0 / 3.0, 0.0, -7.0 / 3.0, 0.0, 2.0 / 3.0, 0.0, -1.0 / 30.0},
}};

constexpr std::array<double, 9> kFactorial = {1, 1, 2, 6, 24, 120, 720, 5040, 40320};

// Scaled Bernoulli polynomial k_q(x) = B_q(x) / q!.
double k_poly(int q, double x) { return bernoulli_poly(q, x) / kFactorial[static_cast<std::size_t>(q)]; }

bool psd_ok(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  double max_abs = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -1e-8 * max_abs;
}

}  // namespace

double bernoulli_poly(int q, double x) {
  if (q < 0 || q > kMaxBernoulliOrder) {
    throw InvalidArgument("bernoulli_poly: order " + std::to_string(q) +
                          " outside supported range [0, 8]");
  }
  const auto& c = kBernoulliCoeffs[static_cast<std::size_t>(q)];
  double v = 0.0;
  for (double coeff : c) v = v * x + coeff;
  return v;
}

double sobolev_kernel(int order, double x, double y, SobolevSign sign) {
  if (order < 1 || 2 * order > kMaxBernoulliOrder) {
    throw InvalidArgument("sobolev_kernel: order must be in [1, 4]");
  }
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) {
    throw KernelDomainError("sobolev_kernel: input outside [0,1]; scaling bug upstream");
  }
  double v = 0.0;
  for (int q = 0; q <= order; ++q) v += k_poly(q, x) * k_poly(q, y);
  double tail = k_poly(2 * order, std::abs(x - y));
  bool order_even = (order % 2 == 0);
  double paper_sign = order_even ? 1.0 : -1.0;
  double s = (sign == SobolevSign::PaperSign) ? paper_sign : -paper_sign;
  return v + s * tail;
}

double gaussian_kernel(double bandwidth, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& y) {
  if (bandwidth <= 0.0) throw InvalidArgument("gaussian_kernel: bandwidth must be > 0");
  if (x.size() != y.size()) throw InvalidArgument("gaussian_kernel: dimension mismatch");
  double d2 = (x - y).squaredNorm();
  return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
}

void KernelSpec::validate() const {
  if (family == KernelFamily::Sobolev) {
    if (order < 1 || order > 4) throw InvalidArgument("KernelSpec: Sobolev order must be in [1, 4]");
  } else {
    if (!(bandwidth > 0.0)) throw InvalidArgument("KernelSpec: Gaussian bandwidth must be > 0");
  }
}

std::string KernelSpec::summary() const {
  std::ostringstream os;
  if (family == KernelFamily::Sobolev) {
    os << "sobolev(order=" << order
       << ", sign=" << (sign == SobolevSign::StandardSign ? "standard" : "paper") << ")";
  } else {
    os << "gaussian(bandwidth=" << bandwidth << ")";
  }
  return os.str();
}

KernelSpec KernelSpec::sobolev(int order) {
  KernelSpec spec;
  spec.family = KernelFamily::Sobolev;
  spec.order = order;
  spec.sign = resolve_sign_convention(order);
  return spec;
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec spec;
  spec.family = KernelFamily::Gaussian;
  spec.bandwidth = bandwidth;
  spec.validate();
  return spec;
}

InputScaler InputScaler::fit(const Eigen::MatrixXd& X) {
  if (X.rows() == 0 || X.cols() == 0) throw InvalidArgument("InputScaler: empty training set");
  InputScaler s;
  s.lo_ = X.colwise().minCoeff();
  s.hi_ = X.colwise().maxCoeff();
  return s;
}

Eigen::MatrixXd InputScaler::scale(const Eigen::MatrixXd& X) const {
  if (X.cols() != lo_.size()) throw InvalidArgument("InputScaler: dimension mismatch");
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double range = hi_[j] - lo_[j];
    if (range <= 0.0) {
      out.col(j).setConstant(0.5);  // degenerate coordinate
    } else {
      out.col(j) = ((X.col(j).array() - lo_[j]) / range).cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return out;
}

Eigen::VectorXd InputScaler::scale_point(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd m = scale(x.transpose());
  return m.row(0).transpose();
}

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& sx,
                    const Eigen::VectorXd& sy) {
  if (spec.family == KernelFamily::Gaussian) {
    return gaussian_kernel(spec.bandwidth, sx, sy);
  }
  if (sx.size() != sy.size()) throw InvalidArgument("kernel_value: dimension mismatch");
  double v = 1.0;
  for (Eigen::Index j = 0; j < sx.size(); ++j) {
    v *= sobolev_kernel(spec.order, sx[j], sy[j], spec.sign);
  }
  return v;
}

void GramMatrix::check_psd() const {
  if (!square) throw InvalidArgument("check_psd: only defined for square Gram matrices");
  if (!psd_ok(values)) {
    throw NotPositiveSemidefinite("Gram matrix failed the PSD tolerance check");
  }
}

GramMatrix gram(const KernelSpec& spec, const InputScaler& scaler,
                const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  spec.validate();
  if (A.rows() == 0 || B.rows() == 0) throw InvalidArgument("gram: empty point set");
  if (A.cols() != B.cols()) throw InvalidArgument("gram: point dimension mismatch");
  Eigen::MatrixXd SA = scaler.scale(A);
  Eigen::MatrixXd SB = scaler.scale(B);
  GramMatrix g;
  g.values.resize(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < SA.rows(); ++i) {
    Eigen::VectorXd a = SA.row(i).transpose();
    for (Eigen::Index j = 0; j < SB.rows(); ++j) {
      g.values(i, j) = kernel_value(spec, a, SB.row(j).transpose());
    }
  }
  return g;
}

GramMatrix gram_square(const KernelSpec& spec, const InputScaler& scaler,
                       const Eigen::MatrixXd& A) {
  spec.validate();
  if (A.rows() == 0) throw InvalidArgument("gram: empty point set");
  Eigen::MatrixXd SA = scaler.scale(A);
  GramMatrix g;
  g.square = true;
  g.values.resize(A.rows(), A.rows());
  for (Eigen::Index i = 0; i < SA.rows(); ++i) {
    Eigen::VectorXd a = SA.row(i).transpose();
    for (Eigen::Index j = i; j < SA.rows(); ++j) {
      double v = kernel_value(spec, a, SA.row(j).transpose());
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

SobolevSign resolve_sign_convention(int order) {
  const int kGridSize = 50;
  Eigen::MatrixXd grid(kGridSize, 1);
  for (int i = 0; i < kGridSize; ++i) grid(i, 0) = static_cast<double>(i) / (kGridSize - 1);
  InputScaler scaler = InputScaler::fit(grid);
  for (SobolevSign sign : {SobolevSign::StandardSign, SobolevSign::PaperSign}) {
    KernelSpec spec;
    spec.family = KernelFamily::Sobolev;
    spec.order = order;
    spec.sign = sign;
    if (psd_ok(gram_square(spec, scaler, grid).values)) return sign;
  }
  throw NotPositiveSemidefinite("resolve_sign_convention: neither sign convention is PSD");
}

double median_heuristic_bandwidth(const Eigen::MatrixXd& scaled_points) {
  Eigen::Index n = scaled_points.rows();
  if (n < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dists.push_back((scaled_points.row(i) - scaled_points.row(j)).norm());
    }
  }
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return std::max(*mid, 1e-8);
}

}  // namespace krri
