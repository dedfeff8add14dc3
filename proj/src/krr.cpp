#include "krri/krr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "krri/errors.hpp"
#include "krri/numerics.hpp"

namespace krri {

namespace {

// Eigendecomposition of the responder Gram, shared by the GCV scores.
struct GcvContext {
  Eigen::VectorXd d;  // eigenvalues, clamped at zero
  Eigen::VectorXd z;  // eigvecs' * y_r
  int n = 0;
  int n1 = 0;
};

GcvContext make_gcv_context(const LabeledSample& sample, const KernelSpec& spec) {
  sample.validate();
  auto resp = sample.responder_indices();
  Eigen::MatrixXd Xr = sample.rows(resp);
  Eigen::VectorXd yr(static_cast<Eigen::Index>(resp.size()));
  for (std::size_t k = 0; k < resp.size(); ++k) yr[static_cast<Eigen::Index>(k)] = sample.y[resp[k]];

  InputScaler scaler = InputScaler::fit(sample.X);
  GramMatrix K = gram_square(spec, scaler, Xr);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.values);

  GcvContext ctx;
  ctx.d = es.eigenvalues().cwiseMax(0.0);
  ctx.z = es.eigenvectors().transpose() * yr;
  ctx.n = sample.n();
  ctx.n1 = static_cast<int>(resp.size());
  return ctx;
}

double score_from_context(const GcvContext& ctx, double lambda, GcvVariant variant) {
  if (!(lambda > 0.0)) throw InvalidArgument("gcv_score: lambda must be > 0");
  // Shrinkage weights lambda / (d_i + lambda); residual and trace in the
  // eigenbasis of the responder Gram. Rows with delta = 0 contribute zero.
  double rss = 0.0;
  double trace = 0.0;
  for (Eigen::Index i = 0; i < ctx.d.size(); ++i) {
    double w = lambda / (ctx.d[i] + lambda);
    rss += (w * ctx.z[i]) * (w * ctx.z[i]);
    trace += w;
  }
  double numerator = rss / ctx.n;
  double denominator = trace / ctx.n;
  if (!(denominator > 1e-12)) throw DegenerateTrace("gcv_score: trace denominator underflow");
  if (variant == GcvVariant::PaperLinearTrace) return numerator / denominator;
  return numerator / (denominator * denominator);
}

}  // namespace

KrrModel fit_krr(const LabeledSample& sample, const KernelSpec& spec, double lambda) {
  sample.validate();
  spec.validate();
  if (!(lambda > 0.0)) throw InvalidArgument("fit_krr: lambda must be > 0");

  auto resp = sample.responder_indices();
  KrrModel model;
  model.spec = spec;
  model.scaler = InputScaler::fit(sample.X);
  model.support_points = sample.rows(resp);
  model.lambda = lambda;

  Eigen::VectorXd yr(static_cast<Eigen::Index>(resp.size()));
  for (std::size_t k = 0; k < resp.size(); ++k) yr[static_cast<Eigen::Index>(k)] = sample.y[resp[k]];

  GramMatrix K = gram_square(spec, model.scaler, model.support_points);
  model.coefficients = solve_spd(K.values, yr, lambda).solution;
  return model;
}

Eigen::VectorXd predict(const KrrModel& model, const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != model.support_points.cols()) {
    throw InvalidArgument("predict: dimension mismatch with training covariates");
  }
  GramMatrix K = gram(model.spec, model.scaler, X_new, model.support_points);
  return K.values * model.coefficients;
}

double gcv_score(const LabeledSample& sample, const KernelSpec& spec, double lambda,
                 GcvVariant variant) {
  return score_from_context(make_gcv_context(sample, spec), lambda, variant);
}

LambdaSelection select_lambda(const LabeledSample& sample, const KernelSpec& spec,
                              const std::vector<double>& grid, GcvVariant variant) {
  if (grid.empty()) throw InvalidArgument("select_lambda: empty grid");
  GcvContext ctx = make_gcv_context(sample, spec);

  LambdaSelection sel;
  sel.scores.resize(static_cast<Eigen::Index>(grid.size()));
  double best = std::numeric_limits<double>::infinity();
  double best_lambda = std::numeric_limits<double>::quiet_NaN();
  bool any = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double s;
    try {
      s = score_from_context(ctx, grid[i], variant);
    } catch (const DegenerateTrace&) {
      s = std::numeric_limits<double>::quiet_NaN();
    }
    sel.scores[static_cast<Eigen::Index>(i)] = s;
    if (!std::isfinite(s)) continue;
    if (!any || s < best || (s == best && grid[i] < best_lambda)) {
      best = s;
      best_lambda = grid[i];
      any = true;
    }
  }
  if (!any) throw Error("select_lambda: all GCV scores non-finite");
  sel.lambda = best_lambda;
  return sel;
}

double impute_estimate(const LabeledSample& sample, const KrrModel& model) {
  auto miss = sample.nonresponder_indices();
  double total = 0.0;
  if (!miss.empty()) {
    Eigen::VectorXd m_miss = predict(model, sample.rows(miss));
    total += m_miss.sum();
  }
  for (int i = 0; i < sample.n(); ++i) {
    if (sample.delta[i] == 1) total += sample.y[i];
  }
  return total / sample.n();
}

std::vector<double> default_lambda_grid(int n, int order) {
  if (n < 1) throw InvalidArgument("default_lambda_grid: n must be >= 1");
  double anchor = std::pow(static_cast<double>(n), 1.0 - order);
  double lo = 1e-6 * anchor * n;
  double hi = 1e2 * n;
  const int count = 30;
  std::vector<double> grid;
  grid.reserve(count + 1);
  double log_lo = std::log(lo), log_hi = std::log(hi);
  for (int i = 0; i < count; ++i) {
    grid.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (count - 1)));
  }
  grid.push_back(anchor);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace krri
