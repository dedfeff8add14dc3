#include "krri/density_ratio.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "krri/errors.hpp"
#include "krri/rng.hpp"

namespace krri {

namespace {

constexpr double kExpClamp = 700.0;

// Optimization workspace bound to one training sample: the Gram over all
// support points is computed once and reused across evaluations and tau.
struct RatioProblem {
  Eigen::MatrixXd K;
  Eigen::ArrayXd resp;     // delta as 0/1
  Eigen::VectorXd nonresp_scaled;  // (1 - delta) / n0
  int n0 = 0;
  int n1 = 0;

  RatioProblem(Eigen::MatrixXd gram_matrix, const Eigen::VectorXi& delta)
      : K(std::move(gram_matrix)) {
    Eigen::Index n = K.rows();
    resp.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) resp[i] = delta[i] == 1 ? 1.0 : 0.0;
    n1 = static_cast<int>(resp.sum());
    n0 = static_cast<int>(n) - n1;
    if (n0 < 1 || n1 < 1) {
      throw InvalidArgument("density ratio: need at least one responder and one non-respondent");
    }
    nonresp_scaled = ((1.0 - resp) / n0).matrix();
  }

  int n() const { return static_cast<int>(K.rows()); }

  // z = [alpha0; alpha]. Returns the objective and fills grad (length n+1).
  // clamp_hit reports whether any responder exponent exceeded the clamp.
  double eval(const Eigen::VectorXd& z, Eigen::VectorXd& grad, double tau,
              bool* clamp_hit = nullptr) const {
    Eigen::Index nn = K.rows();
    double alpha0 = z[0];
    auto alpha = z.tail(nn);

    Eigen::VectorXd Ka = K * alpha;
    Eigen::ArrayXd h = Ka.array() + alpha0;
    if (clamp_hit) *clamp_hit = ((h > kExpClamp) && (resp > 0.5)).any();
    Eigen::ArrayXd eh = h.min(kExpClamp).exp();
    Eigen::ArrayXd w = resp * eh / n1;

    double value = w.sum() - (h * (1.0 - resp)).sum() / n0 + tau * alpha.dot(Ka);

    grad.resize(nn + 1);
    grad[0] = w.sum() - 1.0;
    grad.tail(nn) = K * (w.matrix() - nonresp_scaled) + (2.0 * tau) * Ka;
    return value;
  }
};

RatioProblem make_problem(const LabeledSample& sample, const KernelSpec& spec,
                          const InputScaler& scaler) {
  return RatioProblem(gram_square(spec, scaler, sample.X).values, sample.delta);
}

// Fit on a prebuilt problem; returns [alpha0; alpha] after closed-form
// re-normalization of alpha0.
Eigen::VectorXd fit_on_problem(const RatioProblem& problem, double tau,
                               const DensityRatioOptions& opts, bool* clamp_flag) {
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(problem.n() + 1);
  auto objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    return problem.eval(z, grad, tau);
  };
  OptimResult result = minimize(objective, z0, opts.optim);

  Eigen::VectorXd z = result.minimizer;
  // Normalizing constant in closed form; the optimum value is authoritative
  // only up to solver tolerance, the constraint must hold exactly.
  Eigen::Index n = problem.n();
  Eigen::VectorXd s = problem.K * z.tail(n);
  double max_s = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (problem.resp[i] == 1.0 && s[i] > max_s) max_s = s[i];
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (problem.resp[i] == 1.0) acc += std::exp(s[i] - max_s);
  }
  z[0] = std::log(static_cast<double>(problem.n1)) - (max_s + std::log(acc));

  if (clamp_flag) {
    Eigen::VectorXd unused(n + 1);
    bool hit = false;
    problem.eval(z, unused, tau, &hit);
    *clamp_flag = hit;
  }
  return z;
}

}  // namespace

DensityRatioModel DensityRatioModel::unit(const KernelSpec& spec,
                                          const LabeledSample& sample) {
  DensityRatioModel m;
  m.spec = spec;
  m.scaler = InputScaler::fit(sample.X);
  m.support_points = sample.X;
  m.alpha = Eigen::VectorXd::Zero(sample.n());
  m.alpha0 = 0.0;
  m.tau = 0.0;
  m.n0 = 0;
  m.n1 = sample.n();
  return m;
}

ObjectiveEval dr_objective(const LabeledSample& sample, const KernelSpec& spec,
                           double tau, double alpha0, const Eigen::VectorXd& alpha) {
  sample.validate();
  if (tau < 0.0) throw InvalidArgument("dr_objective: tau must be >= 0");
  if (alpha.size() != sample.n()) throw InvalidArgument("dr_objective: alpha must have length n");
  InputScaler scaler = InputScaler::fit(sample.X);
  RatioProblem problem = make_problem(sample, spec, scaler);
  Eigen::VectorXd z(sample.n() + 1);
  z[0] = alpha0;
  z.tail(sample.n()) = alpha;
  ObjectiveEval out;
  out.value = problem.eval(z, out.gradient, tau);
  return out;
}

DensityRatioModel fit_ratio(const LabeledSample& sample, const KernelSpec& spec,
                            double tau, const DensityRatioOptions& opts) {
  sample.validate();
  spec.validate();
  if (!(tau > 0.0)) throw InvalidArgument("fit_ratio: tau must be > 0");

  DensityRatioModel model;
  model.spec = spec;
  model.scaler = InputScaler::fit(sample.X);
  model.support_points = sample.X;
  model.tau = tau;

  RatioProblem problem = make_problem(sample, spec, model.scaler);
  model.n0 = problem.n0;
  model.n1 = problem.n1;

  bool clamp_flag = false;
  Eigen::VectorXd z = fit_on_problem(problem, tau, opts, &clamp_flag);
  model.alpha0 = z[0];
  model.alpha = z.tail(sample.n());
  model.nonfinite_risk = clamp_flag;
  return model;
}

double normalize_alpha0(const LabeledSample& sample, const KernelSpec& spec,
                        const Eigen::VectorXd& alpha) {
  sample.validate();
  if (alpha.size() != sample.n()) throw InvalidArgument("normalize_alpha0: alpha must have length n");
  auto resp = sample.responder_indices();
  InputScaler scaler = InputScaler::fit(sample.X);
  Eigen::MatrixXd G = gram(spec, scaler, sample.rows(resp), sample.X).values;
  Eigen::VectorXd s = G * alpha;
  double max_s = s.maxCoeff();
  double acc = (s.array() - max_s).exp().sum();
  return std::log(static_cast<double>(resp.size())) - (max_s + std::log(acc));
}

Eigen::VectorXd g_values(const DensityRatioModel& model, const Eigen::MatrixXd& X) {
  if (model.n0 == 0) return Eigen::VectorXd::Ones(X.rows());
  Eigen::MatrixXd G = gram(model.spec, model.scaler, X, model.support_points).values;
  Eigen::ArrayXd s = (G * model.alpha).array() + model.alpha0;
  return s.min(kExpClamp).exp().matrix();
}

double g_hat(const DensityRatioModel& model, const Eigen::VectorXd& x) {
  return g_values(model, x.transpose())[0];
}

Eigen::VectorXd omega_values(const DensityRatioModel& model, const Eigen::MatrixXd& X) {
  if (model.n0 == 0) return Eigen::VectorXd::Ones(X.rows());
  double ratio = static_cast<double>(model.n0) / model.n1;
  return (1.0 + ratio * g_values(model, X).array()).matrix();
}

double omega(const DensityRatioModel& model, const Eigen::VectorXd& x) {
  return omega_values(model, x.transpose())[0];
}

std::vector<std::vector<int>> stratified_folds(const Eigen::VectorXi& delta, int k_folds,
                                               std::uint64_t seed) {
  if (k_folds < 2) throw InvalidArgument("stratified_folds: need at least 2 folds");
  std::vector<std::vector<int>> strata(2);
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    strata[static_cast<std::size_t>(delta[i])].push_back(static_cast<int>(i));
  }
  for (int h = 0; h < 2; ++h) {
    if (static_cast<int>(strata[static_cast<std::size_t>(h)].size()) < k_folds) {
      throw InvalidArgument("stratified_folds: stratum too small for the requested fold count");
    }
    Rng rng = Rng::stream(seed, {static_cast<std::uint64_t>(StreamTag::CvFolds),
                                 static_cast<std::uint64_t>(h)});
    rng.shuffle(strata[static_cast<std::size_t>(h)]);
  }
  std::vector<std::vector<int>> test_sets(static_cast<std::size_t>(k_folds));
  for (int h = 0; h < 2; ++h) {
    const auto& stratum = strata[static_cast<std::size_t>(h)];
    for (std::size_t pos = 0; pos < stratum.size(); ++pos) {
      test_sets[pos % static_cast<std::size_t>(k_folds)].push_back(stratum[pos]);
    }
  }
  return test_sets;
}

TauSelection cv_select_tau(const LabeledSample& sample, const KernelSpec& spec,
                           const std::vector<double>& grid, int k_folds,
                           std::uint64_t seed, int threads,
                           const DensityRatioOptions& opts) {
  sample.validate();
  if (grid.empty()) throw InvalidArgument("cv_select_tau: empty grid");
  std::vector<std::vector<int>> test_sets = stratified_folds(sample.delta, k_folds, seed);

  struct FoldData {
    LabeledSample train;
    std::unique_ptr<RatioProblem> problem;
    Eigen::MatrixXd G_test;  // kernel rows of held-out points vs train support
    std::vector<int> test_idx;
  };
  std::vector<FoldData> folds(static_cast<std::size_t>(k_folds));
  for (int k = 0; k < k_folds; ++k) {
    auto& fold = folds[static_cast<std::size_t>(k)];
    fold.test_idx = test_sets[static_cast<std::size_t>(k)];
    std::vector<bool> in_test(static_cast<std::size_t>(sample.n()), false);
    for (int idx : fold.test_idx) in_test[static_cast<std::size_t>(idx)] = true;
    std::vector<int> train_idx;
    for (int i = 0; i < sample.n(); ++i) {
      if (!in_test[static_cast<std::size_t>(i)]) train_idx.push_back(i);
    }
    fold.train = sample.subset(train_idx);
    InputScaler scaler = InputScaler::fit(fold.train.X);
    fold.problem = std::make_unique<RatioProblem>(
        gram_square(spec, scaler, fold.train.X).values, fold.train.delta);
    fold.G_test = gram(spec, scaler, sample.rows(fold.test_idx), fold.train.X).values;
  }

  // Held-out misclassification counts per (fold, tau) task.
  Eigen::MatrixXd losses(k_folds, static_cast<Eigen::Index>(grid.size()));
  const int total_tasks = k_folds * static_cast<int>(grid.size());
  std::atomic<int> next_task{0};
  auto worker = [&]() {
    for (;;) {
      int task = next_task.fetch_add(1);
      if (task >= total_tasks) return;
      int k = task / static_cast<int>(grid.size());
      int t = task % static_cast<int>(grid.size());
      const auto& fold = folds[static_cast<std::size_t>(k)];
      Eigen::VectorXd z = fit_on_problem(*fold.problem, grid[static_cast<std::size_t>(t)],
                                         opts, nullptr);
      Eigen::Index nt = fold.train.n();
      Eigen::ArrayXd s = (fold.G_test * z.tail(nt)).array() + z[0];
      Eigen::ArrayXd g = s.min(kExpClamp).exp();
      double n0t = fold.problem->n0, n1t = fold.problem->n1;
      double loss = 0.0;
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        double p_hat = n1t / (n1t + n0t * g[j]);
        int dj = sample.delta[fold.test_idx[static_cast<std::size_t>(j)]];
        if (dj == 1 && p_hat < 0.5) loss += 1.0;
        if (dj == 0 && p_hat > 0.5) loss += 1.0;
      }
      losses(k, t) = loss;
    }
  };
  int worker_count = std::max(1, std::min(threads, total_tasks));
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  TauSelection sel;
  sel.cv_scores = losses.colwise().sum() / static_cast<double>(k_folds);
  double best = std::numeric_limits<double>::infinity();
  double best_tau = grid[0];
  for (std::size_t t = 0; t < grid.size(); ++t) {
    double s = sel.cv_scores[static_cast<Eigen::Index>(t)];
    if (s < best || (s == best && grid[t] > best_tau)) {
      best = s;
      best_tau = grid[t];
    }
  }
  sel.tau = best_tau;
  return sel;
}

std::vector<double> default_tau_grid() {
  const int count = 20;
  std::vector<double> grid;
  grid.reserve(count);
  double log_lo = std::log(1e-6), log_hi = std::log(1e2);
  for (int i = 0; i < count; ++i) {
    grid.push_back(std::exp(log_lo + (log_hi - log_lo) * i / (count - 1)));
  }
  return grid;
}

}  // namespace krri
