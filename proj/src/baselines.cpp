#include "krri/baselines.hpp"

#include <cmath>
#include <vector>

#include "krri/errors.hpp"

namespace krri {

namespace {

constexpr int kDegree = 3;

std::vector<double> clamped_knots(int interior_knots) {
  int nb = interior_knots + kDegree + 1;
  std::vector<double> knots(static_cast<std::size_t>(nb + kDegree + 1));
  for (int i = 0; i <= kDegree; ++i) knots[static_cast<std::size_t>(i)] = 0.0;
  for (int i = 1; i <= interior_knots; ++i) {
    knots[static_cast<std::size_t>(kDegree + i)] = static_cast<double>(i) / (interior_knots + 1);
  }
  for (int i = 0; i <= kDegree; ++i) {
    knots[static_cast<std::size_t>(nb + i)] = 1.0;
  }
  return knots;
}

// Design row layout: [1, coord-0 basis (first function dropped), coord-1 ...].
Eigen::MatrixXd bspline_design(const Eigen::MatrixXd& scaled, int interior_knots) {
  int per_coord = interior_knots + kDegree;  // after dropping the first
  Eigen::Index n = scaled.rows(), d = scaled.cols();
  Eigen::MatrixXd design(n, 1 + d * per_coord);
  design.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::VectorXd basis = bspline_basis(scaled(i, j), interior_knots);
      design.block(i, 1 + j * per_coord, 1, per_coord) =
          basis.tail(per_coord).transpose();
    }
  }
  return design;
}

}  // namespace

Eigen::VectorXd bspline_basis(double t, int interior_knots) {
  if (interior_knots < 0) throw InvalidArgument("bspline_basis: negative knot count");
  t = std::min(std::max(t, 0.0), 1.0);
  const std::vector<double> knots = clamped_knots(interior_knots);
  const int nb = interior_knots + kDegree + 1;
  const int n_intervals = static_cast<int>(knots.size()) - 1;

  std::vector<double> N(static_cast<std::size_t>(n_intervals), 0.0);
  if (t >= 1.0) {
    N[static_cast<std::size_t>(nb - 1)] = 1.0;  // closed last span
  } else {
    for (int i = 0; i < n_intervals; ++i) {
      if (knots[static_cast<std::size_t>(i)] <= t && t < knots[static_cast<std::size_t>(i + 1)]) {
        N[static_cast<std::size_t>(i)] = 1.0;
        break;
      }
    }
  }
  for (int deg = 1; deg <= kDegree; ++deg) {
    for (int i = 0; i + deg + 1 <= n_intervals; ++i) {
      double left = 0.0, right = 0.0;
      double dl = knots[static_cast<std::size_t>(i + deg)] - knots[static_cast<std::size_t>(i)];
      double dr = knots[static_cast<std::size_t>(i + deg + 1)] - knots[static_cast<std::size_t>(i + 1)];
      if (dl > 0.0) left = (t - knots[static_cast<std::size_t>(i)]) / dl * N[static_cast<std::size_t>(i)];
      if (dr > 0.0) {
        right = (knots[static_cast<std::size_t>(i + deg + 1)] - t) / dr * N[static_cast<std::size_t>(i + 1)];
      }
      N[static_cast<std::size_t>(i)] = left + right;
    }
  }
  Eigen::VectorXd out(nb);
  for (int i = 0; i < nb; ++i) out[i] = N[static_cast<std::size_t>(i)];
  return out;
}

LinearModel fit_linear(const LabeledSample& sample) {
  sample.validate();
  auto resp = sample.responder_indices();
  int d = sample.dim();
  if (static_cast<int>(resp.size()) < d + 1) {
    throw InvalidArgument("fit_linear: need at least d+1 responders");
  }
  Eigen::MatrixXd design(static_cast<Eigen::Index>(resp.size()), d + 1);
  Eigen::VectorXd yr(static_cast<Eigen::Index>(resp.size()));
  for (std::size_t k = 0; k < resp.size(); ++k) {
    design(static_cast<Eigen::Index>(k), 0) = 1.0;
    design.block(static_cast<Eigen::Index>(k), 1, 1, d) = sample.X.row(resp[k]);
    yr[static_cast<Eigen::Index>(k)] = sample.y[resp[k]];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < d + 1) throw RankDeficient("fit_linear: responder design is rank deficient");
  LinearModel model;
  model.coefficients = qr.solve(yr);
  return model;
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() + 1 != model.coefficients.size()) {
    throw InvalidArgument("predict: dimension mismatch");
  }
  return (X * model.coefficients.tail(X.cols())).array() + model.coefficients[0];
}

BSplineModel fit_bspline(const LabeledSample& sample, int interior_knots) {
  sample.validate();
  if (interior_knots < 0) throw InvalidArgument("fit_bspline: negative knot count");
  auto resp = sample.responder_indices();
  int d = sample.dim();
  int cols = 1 + d * (interior_knots + kDegree);
  if (static_cast<int>(resp.size()) < cols) {
    throw InvalidArgument("fit_bspline: fewer responders than basis functions");
  }

  BSplineModel model;
  model.scaler = InputScaler::fit(sample.X);
  model.interior_knots = interior_knots;

  Eigen::MatrixXd design = bspline_design(model.scaler.scale(sample.rows(resp)), interior_knots);
  Eigen::VectorXd yr(static_cast<Eigen::Index>(resp.size()));
  for (std::size_t k = 0; k < resp.size(); ++k) yr[static_cast<Eigen::Index>(k)] = sample.y[resp[k]];

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < cols) {
    Eigen::MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += 1e-8;
    model.coefficients = Eigen::LDLT<Eigen::MatrixXd>(normal).solve(design.transpose() * yr);
    model.ridged = true;
  } else {
    model.coefficients = qr.solve(yr);
  }
  return model;
}

Eigen::VectorXd predict(const BSplineModel& model, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd design = bspline_design(model.scaler.scale(X), model.interior_knots);
  if (design.cols() != model.coefficients.size()) {
    throw InvalidArgument("predict: dimension mismatch");
  }
  return design * model.coefficients;
}

double impute_from_predictions(const LabeledSample& sample, const Eigen::VectorXd& m_hat) {
  if (m_hat.size() != sample.n()) throw InvalidArgument("impute_from_predictions: size mismatch");
  double total = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    total += sample.delta[i] == 1 ? sample.y[i] : m_hat[i];
  }
  return total / sample.n();
}

double impute_with(const LinearModel& model, const LabeledSample& sample) {
  return impute_from_predictions(sample, predict(model, sample.X));
}

double impute_with(const BSplineModel& model, const LabeledSample& sample) {
  return impute_from_predictions(sample, predict(model, sample.X));
}

int count_out_of_unit_interval(const Eigen::VectorXd& predictions) {
  int count = 0;
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    if (predictions[i] < 0.0 || predictions[i] > 1.0) ++count;
  }
  return count;
}

}  // namespace krri
