#include "krri/inference.hpp"

#include <cmath>

#include "krri/errors.hpp"
#include "krri/numerics.hpp"

namespace krri {

Eigen::VectorXd influence_values(const LabeledSample& sample,
                                 const Eigen::VectorXd& m_hat,
                                 const Eigen::VectorXd& omega_hat) {
  if (m_hat.size() != sample.n() || omega_hat.size() != sample.n()) {
    throw InvalidArgument("influence_values: size mismatch");
  }
  Eigen::VectorXd eta(sample.n());
  for (int i = 0; i < sample.n(); ++i) {
    if (sample.delta[i] == 1) {
      eta[i] = m_hat[i] + omega_hat[i] * (sample.y[i] - m_hat[i]);
    } else {
      eta[i] = m_hat[i];
    }
  }
  return eta;
}

Eigen::VectorXd influence_values(const LabeledSample& sample, const KrrModel& krr_model,
                                 const DensityRatioModel& ratio_model) {
  Eigen::VectorXd m_hat = predict(krr_model, sample.X);
  Eigen::VectorXd omega_hat = omega_values(ratio_model, sample.X);
  return influence_values(sample, m_hat, omega_hat);
}

double variance_estimate(const Eigen::VectorXd& eta) {
  Eigen::Index n = eta.size();
  if (n < 2) throw InvalidArgument("variance_estimate: need n >= 2");
  double mean = eta.mean();
  double ss = (eta.array() - mean).square().sum();
  return ss / (static_cast<double>(n) * (static_cast<double>(n) - 1.0));
}

std::pair<double, double> confidence_interval(double theta_hat, double variance_hat,
                                              double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence_interval: invalid level");
  if (variance_hat < 0.0) throw InvalidArgument("confidence_interval: negative variance");
  double z = norm_quantile(0.5 * (1.0 + level));
  double half = z * std::sqrt(variance_hat);
  return {theta_hat - half, theta_hat + half};
}

ImputationOptions::ImputationOptions() : spec(KernelSpec::sobolev(2)) {}

PipelineResult impute_with_inference(const LabeledSample& sample,
                                     const ImputationOptions& options) {
  sample.validate();
  KernelSpec spec = options.spec;
  spec.validate();

  std::vector<double> lambda_grid = options.lambda_grid;
  if (lambda_grid.empty()) {
    int order = spec.family == KernelFamily::Sobolev ? spec.order : 2;
    lambda_grid = default_lambda_grid(sample.n(), order);
  }

  PipelineResult out;
  LambdaSelection lambda_sel = select_lambda(sample, spec, lambda_grid, options.gcv);
  out.lambda_scores = lambda_sel.scores;
  KrrModel krr = fit_krr(sample, spec, lambda_sel.lambda);
  out.m_hat = predict(krr, sample.X);

  double theta_hat = impute_estimate(sample, krr);

  DensityRatioModel ratio;
  if (sample.n0() == 0) {
    ratio = DensityRatioModel::unit(spec, sample);
    out.tau_scores.resize(0);
  } else {
    std::vector<double> tau_grid = options.tau_grid;
    if (tau_grid.empty()) tau_grid = default_tau_grid();
    TauSelection tau_sel = cv_select_tau(sample, spec, tau_grid, options.k_folds,
                                         options.seed, options.threads, options.ratio);
    out.tau_scores = tau_sel.cv_scores;
    ratio = fit_ratio(sample, spec, tau_sel.tau, options.ratio);
  }
  out.omega_hat = omega_values(ratio, sample.X);

  Eigen::VectorXd eta = influence_values(sample, out.m_hat, out.omega_hat);
  double v_hat = variance_estimate(eta);

  ImputationReport& report = out.report;
  report.theta_hat = theta_hat;
  report.variance_hat = v_hat;
  report.std_error = std::sqrt(v_hat);
  for (double level : options.levels) {
    report.ci[level] = confidence_interval(theta_hat, v_hat, level);
  }
  report.n = sample.n();
  report.n1 = sample.n1();
  report.n0 = sample.n0();
  report.lambda = lambda_sel.lambda;
  report.tau = ratio.tau;
  report.max_omega = out.omega_hat.maxCoeff();
  report.omega_warning = report.max_omega > 1.0 / options.c_min;
  report.ratio_clamped = ratio.nonfinite_risk;
  report.gcv_variant =
      options.gcv == GcvVariant::PaperLinearTrace ? "paper" : "squared";
  report.kernel = spec.summary();
  return out;
}

}  // namespace krri
