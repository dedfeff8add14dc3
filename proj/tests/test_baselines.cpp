#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "krri/baselines.hpp"
#include "krri/errors.hpp"
#include "krri/rng.hpp"

using namespace krri;

namespace {

LabeledSample linear_sample(int n, int d, std::uint64_t seed, double noise = 0.0) {
  Rng rng = Rng::stream(seed, StreamTag::Misc);
  LabeledSample s;
  s.X.resize(n, d);
  s.y.resize(n);
  s.delta.resize(n);
  for (int i = 0; i < n; ++i) {
    double acc = 2.0;
    for (int j = 0; j < d; ++j) {
      s.X(i, j) = rng.uniform(1.0, 3.0);
      acc += (j + 1.0) * 0.5 * s.X(i, j);
    }
    s.y[i] = acc + noise * rng.normal();
    s.delta[i] = rng.bernoulli(0.75);
  }
  s.delta[0] = 1;
  return s;
}

}  // namespace

TEST_CASE("linear fit recovers exact linear data") {
  LabeledSample s = linear_sample(30, 3, 11);
  LinearModel model = fit_linear(s);
  CHECK(std::abs(model.coefficients[0] - 2.0) < 1e-10);
  CHECK(std::abs(model.coefficients[1] - 0.5) < 1e-10);
  CHECK(std::abs(model.coefficients[2] - 1.0) < 1e-10);
  CHECK(std::abs(model.coefficients[3] - 1.5) < 1e-10);
  Eigen::VectorXd pred = predict(model, s.X);
  CHECK((pred - s.y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("linear fit on constant responses") {
  LabeledSample s = linear_sample(20, 2, 12);
  s.y.setConstant(4.25);
  LinearModel model = fit_linear(s);
  CHECK(model.coefficients[0] == doctest::Approx(4.25).epsilon(1e-10));
  CHECK(std::abs(model.coefficients[1]) < 1e-10);
  CHECK(std::abs(model.coefficients[2]) < 1e-10);
}

TEST_CASE("linear fit matches the normal-equations oracle") {
  LabeledSample s = linear_sample(40, 2, 13, 0.5);
  // Keep exactly 5 responders.
  s.delta.setZero();
  for (int i : {3, 11, 19, 27, 35}) s.delta[i] = 1;
  LinearModel model = fit_linear(s);

  Eigen::MatrixXd design(5, 3);
  Eigen::VectorXd yr(5);
  int k = 0;
  for (int i : {3, 11, 19, 27, 35}) {
    design(k, 0) = 1.0;
    design(k, 1) = s.X(i, 0);
    design(k, 2) = s.X(i, 1);
    yr[k++] = s.y[i];
  }
  Eigen::VectorXd oracle_coef =
      (design.transpose() * design).inverse() * design.transpose() * yr;
  CHECK((model.coefficients - oracle_coef).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("linear fit detects rank deficiency") {
  LabeledSample s = linear_sample(25, 2, 14);
  s.X.col(1) = 2.0 * s.X.col(0);  // collinear covariates
  CHECK_THROWS_AS(fit_linear(s), RankDeficient);
}

TEST_CASE("bspline basis is a partition of unity") {
  for (int knots : {0, 1, 3, 5}) {
    for (int i = 0; i <= 100; ++i) {
      Eigen::VectorXd basis = bspline_basis(i / 100.0, knots);
      CHECK(basis.size() == knots + 4);
      CHECK(std::abs(basis.sum() - 1.0) <= 1e-12);
      CHECK(basis.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("bspline fit reproduces data generated from its own basis") {
  Rng rng = Rng::stream(15, StreamTag::Misc);
  int n = 80, knots = 3;
  LabeledSample s;
  s.X.resize(n, 2);
  s.delta = Eigen::VectorXi::Ones(n);
  for (int i = 0; i < n; ++i) {
    s.X(i, 0) = rng.uniform(1.0, 3.0);
    s.X(i, 1) = rng.uniform(1.0, 3.0);
  }
  // Random additive spline surface through the same basis the model uses.
  InputScaler scaler = InputScaler::fit(s.X);
  Eigen::MatrixXd scaled = scaler.scale(s.X);
  int per = knots + 3;
  Eigen::VectorXd coef(1 + 2 * per);
  for (int i = 0; i < coef.size(); ++i) coef[i] = rng.uniform(-2.0, 2.0);
  s.y.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = coef[0];
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd basis = bspline_basis(scaled(i, j), knots);
      for (int b = 0; b < per; ++b) v += coef[1 + j * per + b] * basis[b + 1];
    }
    s.y[i] = v;
  }
  BSplineModel model = fit_bspline(s, knots);
  CHECK(!model.ridged);
  Eigen::VectorXd pred = predict(model, s.X);
  CHECK((pred - s.y).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("bspline with zero interior knots equals additive cubic regression") {
  Rng rng = Rng::stream(16, StreamTag::Misc);
  int n = 60;
  LabeledSample s;
  s.X.resize(n, 2);
  s.y.resize(n);
  s.delta.resize(n);
  for (int i = 0; i < n; ++i) {
    s.X(i, 0) = rng.uniform(1.0, 3.0);
    s.X(i, 1) = rng.uniform(1.0, 3.0);
    s.y[i] = std::sin(2.0 * s.X(i, 0)) + 0.2 * s.X(i, 1) * s.X(i, 1) + 0.3 * rng.normal();
    s.delta[i] = rng.bernoulli(0.8);
  }
  s.delta[0] = 1;
  BSplineModel model = fit_bspline(s, 0);

  // Additive cubic polynomial least squares on the same responders.
  auto resp = s.responder_indices();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(resp.size()), 7);
  Eigen::VectorXd yr(static_cast<Eigen::Index>(resp.size()));
  for (std::size_t k = 0; k < resp.size(); ++k) {
    double x1 = s.X(resp[k], 0), x2 = s.X(resp[k], 1);
    design.row(static_cast<Eigen::Index>(k)) << 1.0, x1, x1 * x1, x1 * x1 * x1, x2, x2 * x2,
        x2 * x2 * x2;
    yr[static_cast<Eigen::Index>(k)] = s.y[resp[k]];
  }
  Eigen::VectorXd beta = design.colPivHouseholderQr().solve(yr);
  for (int i = 0; i < n; ++i) {
    double x1 = s.X(i, 0), x2 = s.X(i, 1);
    double oracle_pred = beta[0] + beta[1] * x1 + beta[2] * x1 * x1 + beta[3] * x1 * x1 * x1 +
                         beta[4] * x2 + beta[5] * x2 * x2 + beta[6] * x2 * x2 * x2;
    CHECK(predict(model, s.X.row(i))[0] == doctest::Approx(oracle_pred).epsilon(1e-7));
  }
}

TEST_CASE("imputation arithmetic") {
  LabeledSample s = linear_sample(25, 2, 17, 0.3);
  s.delta.setOnes();
  LinearModel model = fit_linear(s);
  CHECK(impute_with(model, s) == doctest::Approx(s.y.mean()).epsilon(1e-13));

  // Hand case: y = (1, 2, ., .), delta = (1, 1, 0, 0), imputations (3, 5).
  LabeledSample hand;
  hand.X.resize(4, 1);
  hand.X << 1, 2, 3, 4;
  hand.y.resize(4);
  hand.y << 1.0, 2.0, 0.0, 0.0;
  hand.delta.resize(4);
  hand.delta << 1, 1, 0, 0;
  Eigen::VectorXd m_hat(4);
  m_hat << 99.0, 99.0, 3.0, 5.0;  // values at responders are ignored
  CHECK(impute_from_predictions(hand, m_hat) == doctest::Approx(2.75).epsilon(1e-15));

  // All rows imputed at a constant.
  LabeledSample none = hand;
  none.delta.setZero();
  Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, 7.5);
  CHECK(impute_from_predictions(none, constant) == doctest::Approx(7.5).epsilon(1e-15));
}

TEST_CASE("out-of-range prediction diagnostic") {
  Eigen::VectorXd pred(5);
  pred << -0.1, 0.0, 0.5, 1.0, 1.2;
  CHECK(count_out_of_unit_interval(pred) == 2);
}

TEST_CASE("baseline preconditions") {
  LabeledSample s = linear_sample(6, 4, 18);
  s.delta.setZero();
  for (int i : {0, 1, 2}) s.delta[i] = 1;  // fewer responders than d+1
  CHECK_THROWS_AS(fit_linear(s), InvalidArgument);
  CHECK_THROWS_AS(fit_bspline(s, 3), InvalidArgument);
  CHECK_THROWS_AS(bspline_basis(0.5, -1), InvalidArgument);
}
