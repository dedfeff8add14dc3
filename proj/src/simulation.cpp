#include "krri/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

#include "krri/baselines.hpp"
#include "krri/errors.hpp"
#include "krri/rng.hpp"

namespace krri {

namespace {

constexpr double kSigma = 1.7320508075688772935;  // sqrt(3)
constexpr std::uint64_t kTruthSeed = 0x74727574680ULL;

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double model_index(SimModel model, const Eigen::Vector4d& x) {
  switch (model) {
    case SimModel::A:
      return 3.0 + 2.5 * x[0] + 2.75 * x[1] + 2.5 * x[2] + 2.25 * x[3];
    case SimModel::B:
      return 3.0 + (1.0 / 35.0) * x[0] * x[0] * std::pow(x[1], 3) * x[2] + 0.1 * x[3];
    case SimModel::C:
      return 3.0 + (1.0 / 180.0) * x[0] * x[0] * std::pow(x[1], 3) * x[2] * x[3] * x[3];
    case SimModel::D:
      return 0.5 + (1.0 / 35.0) * x[0] * x[0] * std::pow(x[1], 3) * x[2] + 0.1 * x[3];
    case SimModel::E:
      return 0.5 + (1.0 / 180.0) * x[0] * x[0] * std::pow(x[1], 3) * x[2] * x[3] * x[3];
    case SimModel::F:
      return 0.5 + 0.15 * x[0] * x[1] * x[2] * x[2] + 0.4 * x[1] * x[2];
  }
  throw InvalidArgument("unknown simulation model");
}

}  // namespace

bool is_binary(SimModel model) {
  return model == SimModel::D || model == SimModel::E || model == SimModel::F;
}

std::string to_string(SimModel model) {
  switch (model) {
    case SimModel::A: return "A";
    case SimModel::B: return "B";
    case SimModel::C: return "C";
    case SimModel::D: return "D";
    case SimModel::E: return "E";
    case SimModel::F: return "F";
  }
  return "?";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::KRR: return "KRR";
    case Method::BSpline: return "B-spline";
    case Method::Linear: return "Linear";
  }
  return "?";
}

SimModel sim_model_from_string(const std::string& s) {
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'F') {
    return static_cast<SimModel>(s[0] - 'A');
  }
  throw InvalidArgument("unknown model id '" + s + "' (expected A..F)");
}

Method method_from_string(const std::string& s) {
  if (s == "KRR") return Method::KRR;
  if (s == "BSpline" || s == "B-spline") return Method::BSpline;
  if (s == "Linear") return Method::Linear;
  throw InvalidArgument("unknown method '" + s + "' (expected KRR, BSpline, Linear)");
}

SimConfig::SimConfig() : spec(KernelSpec::sobolev(2)) {}

void SimConfig::validate() const {
  if (n < 50) throw InvalidArgument("SimConfig: n must be >= 50");
  if (replications < 1) throw InvalidArgument("SimConfig: replications must be >= 1");
  if (methods.empty()) throw InvalidArgument("SimConfig: no methods requested");
  spec.validate();
}

double mean_function(SimModel model, const Eigen::Vector4d& x) {
  double index = model_index(model, x);
  return is_binary(model) ? expit(index) : index;
}

double response_probability(const Eigen::Vector4d& x) {
  static const Eigen::Vector4d beta(-1.0, 0.5, -0.25, -0.1);
  return expit(x.dot(beta) + 2.5);
}

GeneratedReplicate generate(const SimConfig& config, int replicate_index) {
  Rng rng = Rng::stream(config.seed, {static_cast<std::uint64_t>(StreamTag::Data),
                                      static_cast<std::uint64_t>(replicate_index)});
  const int n = config.n;
  GeneratedReplicate out;
  out.sample.X.resize(n, 4);
  out.sample.y.resize(n);
  out.sample.delta.resize(n);
  out.m_true.resize(n);
  out.pi_true.resize(n);

  // Draw order is fixed: the covariate matrix row by row, then the
  // responses, then the response indicators.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) out.sample.X(i, j) = rng.uniform(1.0, 3.0);
  }
  const bool binary = is_binary(config.model);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector4d x = out.sample.X.row(i).transpose();
    double m = mean_function(config.model, x);
    out.m_true[i] = m;
    out.sample.y[i] = binary ? static_cast<double>(rng.bernoulli(m)) : m + kSigma * rng.normal();
  }
  for (int i = 0; i < n; ++i) {
    Eigen::Vector4d x = out.sample.X.row(i).transpose();
    double p = response_probability(x);
    out.pi_true[i] = p;
    out.sample.delta[i] = rng.bernoulli(p);
  }
  return out;
}

double true_theta(SimModel model) {
  static std::mutex mutex;
  static std::map<SimModel, double> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(model);
  if (it != cache.end()) return it->second;

  Rng rng = Rng::stream(kTruthSeed, {static_cast<std::uint64_t>(StreamTag::Truth),
                                     static_cast<std::uint64_t>(model)});
  const long long draws = 10'000'000;
  double acc = 0.0;
  Eigen::Vector4d x;
  for (long long k = 0; k < draws; ++k) {
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform(1.0, 3.0);
    acc += mean_function(model, x);
  }
  double theta = acc / static_cast<double>(draws);
  cache[model] = theta;
  return theta;
}

namespace {

struct ReplicateResult {
  bool ok = false;
  std::map<Method, double> theta;
  std::map<Method, int> out_of_range;
  double vhat = 0.0, lambda = 0.0, tau = 0.0;
  std::map<double, bool> ci_hit;
  double theta_tilde = 0.0;
};

ReplicateResult run_replicate(const SimConfig& config, int r, double theta_true) {
  GeneratedReplicate gen = generate(config, r);
  const LabeledSample& sample = gen.sample;
  const bool binary = is_binary(config.model);

  ReplicateResult res;
  // Oracle linearization from the true regression and propensity.
  double acc = 0.0;
  for (int i = 0; i < sample.n(); ++i) {
    acc += gen.m_true[i];
    if (sample.delta[i] == 1) {
      acc += (sample.y[i] - gen.m_true[i]) / gen.pi_true[i];
    }
  }
  res.theta_tilde = acc / sample.n();

  auto miss = sample.nonresponder_indices();
  for (Method method : config.methods) {
    switch (method) {
      case Method::KRR: {
        ImputationOptions opts;
        opts.spec = config.spec;
        opts.gcv = config.gcv;
        opts.lambda_grid = config.lambda_grid;
        opts.tau_grid = config.tau_grid;
        opts.k_folds = config.k_folds;
        opts.levels = config.levels;
        opts.c_min = config.c_min;
        opts.threads = 1;  // parallelism lives at the replicate level
        std::uint64_t mix = static_cast<std::uint64_t>(r);
        opts.seed = config.seed ^ splitmix64(mix);
        PipelineResult pipeline = impute_with_inference(sample, opts);
        res.theta[method] = pipeline.report.theta_hat;
        res.vhat = pipeline.report.variance_hat;
        res.lambda = pipeline.report.lambda;
        res.tau = pipeline.report.tau;
        for (const auto& [level, interval] : pipeline.report.ci) {
          res.ci_hit[level] = interval.first <= theta_true && theta_true <= interval.second;
        }
        if (binary) {
          int count = 0;
          for (int idx : miss) {
            double v = pipeline.m_hat[idx];
            if (v < 0.0 || v > 1.0) ++count;
          }
          res.out_of_range[method] = count;
        }
        break;
      }
      case Method::BSpline: {
        BSplineModel model = fit_bspline(sample, config.bspline_knots);
        Eigen::VectorXd pred = predict(model, sample.X);
        res.theta[method] = impute_from_predictions(sample, pred);
        if (binary) {
          int count = 0;
          for (int idx : miss) {
            if (pred[idx] < 0.0 || pred[idx] > 1.0) ++count;
          }
          res.out_of_range[method] = count;
        }
        break;
      }
      case Method::Linear: {
        LinearModel model = fit_linear(sample);
        Eigen::VectorXd pred = predict(model, sample.X);
        res.theta[method] = impute_from_predictions(sample, pred);
        if (binary) {
          int count = 0;
          for (int idx : miss) {
            if (pred[idx] < 0.0 || pred[idx] > 1.0) ++count;
          }
          res.out_of_range[method] = count;
        }
        break;
      }
    }
  }
  res.ok = true;
  return res;
}

double sd(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / (v.size() - 1));
}

}  // namespace

SimReport run_mc(const SimConfig& config) {
  config.validate();
  const int R = config.replications;
  const double theta_true = true_theta(config.model);
  const int max_failures = static_cast<int>(0.01 * R);

  std::vector<std::optional<ReplicateResult>> results(static_cast<std::size_t>(R));
  std::atomic<int> next{0};
  std::atomic<int> failures{0};
  std::atomic<bool> abort{false};

  auto worker = [&]() {
    for (;;) {
      if (abort.load()) return;
      int r = next.fetch_add(1);
      if (r >= R) return;
      try {
        results[static_cast<std::size_t>(r)] = run_replicate(config, r, theta_true);
      } catch (const std::exception&) {
        results[static_cast<std::size_t>(r)] = ReplicateResult{};  // ok = false
        if (failures.fetch_add(1) + 1 > max_failures) abort.store(true);
      }
    }
  };

  int threads = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, R));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (abort.load()) {
    throw SimulationFailure("run_mc: more than 1% of replicates failed");
  }

  SimReport report;
  report.config = config;
  report.theta_true = theta_true;
  report.replications = R;

  std::vector<int> ok_indices;
  for (int r = 0; r < R; ++r) {
    if (results[static_cast<std::size_t>(r)] && results[static_cast<std::size_t>(r)]->ok) {
      ok_indices.push_back(r);
    } else {
      report.failed_indices.push_back(r);
    }
  }
  report.failed = static_cast<int>(report.failed_indices.size());
  if (report.failed > max_failures) {
    throw SimulationFailure("run_mc: more than 1% of replicates failed");
  }
  const int R_ok = static_cast<int>(ok_indices.size());
  report.degenerate_variance = R_ok == 1;

  const bool has_krr =
      std::find(config.methods.begin(), config.methods.end(), Method::KRR) !=
      config.methods.end();
  const bool binary = is_binary(config.model);

  for (Method method : config.methods) {
    Eigen::VectorXd theta(R_ok);
    int oor_total = 0;
    for (int k = 0; k < R_ok; ++k) {
      const ReplicateResult& rr = *results[static_cast<std::size_t>(ok_indices[static_cast<std::size_t>(k)])];
      theta[k] = rr.theta.at(method);
      if (binary) oor_total += rr.out_of_range.at(method);
    }
    MethodStats stats;
    double mean_theta = theta.mean();
    stats.bias = mean_theta - theta_true;
    stats.var = R_ok > 1 ? (theta.array() - mean_theta).square().sum() / (R_ok - 1) : 0.0;
    Eigen::VectorXd sq_err = (theta.array() - theta_true).square();
    stats.mse = sq_err.mean();
    stats.bias_se = std::sqrt(stats.var / R_ok);
    stats.var_se = R_ok > 1 ? stats.var * std::sqrt(2.0 / (R_ok - 1)) : 0.0;
    stats.mse_se = sd(sq_err) / std::sqrt(static_cast<double>(R_ok));
    stats.out_of_range = binary ? oor_total : -1;
    report.stats[method] = stats;
    report.theta_reps[method] = theta;
  }

  report.theta_tilde_reps.resize(R_ok);
  for (int k = 0; k < R_ok; ++k) {
    report.theta_tilde_reps[k] =
        results[static_cast<std::size_t>(ok_indices[static_cast<std::size_t>(k)])]->theta_tilde;
  }

  if (has_krr) {
    report.vhat_reps.resize(R_ok);
    report.lambda_reps.resize(R_ok);
    report.tau_reps.resize(R_ok);
    std::map<double, int> hits;
    for (int k = 0; k < R_ok; ++k) {
      const ReplicateResult& rr = *results[static_cast<std::size_t>(ok_indices[static_cast<std::size_t>(k)])];
      report.vhat_reps[k] = rr.vhat;
      report.lambda_reps[k] = rr.lambda;
      report.tau_reps[k] = rr.tau;
      for (const auto& [level, hit] : rr.ci_hit) hits[level] += hit ? 1 : 0;
    }
    report.vhat_mean = report.vhat_reps.mean();
    double krr_var = report.stats.at(Method::KRR).var;
    if (krr_var > 0.0) {
      report.rel_bias = report.vhat_mean / krr_var - 1.0;
      double vhat_sd = sd(report.vhat_reps);
      double ratio = report.vhat_mean / krr_var;
      report.rel_bias_se =
          ratio * std::sqrt(vhat_sd * vhat_sd /
                                (R_ok * report.vhat_mean * report.vhat_mean) +
                            2.0 / std::max(1, R_ok - 1));
    }
    for (const auto& [level, count] : hits) {
      double c = static_cast<double>(count) / R_ok;
      report.coverage[level] = c;
      report.coverage_se[level] = std::sqrt(c * (1.0 - c) / R_ok);
    }
  }
  return report;
}

}  // namespace krri
