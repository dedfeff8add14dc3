#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "krri/csv.hpp"
#include "krri/errors.hpp"
#include "krri/inference.hpp"
#include "krri/report_io.hpp"
#include "krri/simulation.hpp"

namespace fs = std::filesystem;
using namespace krri;

namespace {

struct CommonOptions {
  std::string kernel = "sobolev";
  int order = 2;
  double bandwidth = 0.0;  // 0: median heuristic
  std::string sign = "auto";
  std::string gcv = "squared";
  std::vector<double> lambda_grid;
  std::vector<double> tau_grid;
  int folds = 5;
  std::vector<double> levels = {0.90, 0.95};
  std::uint64_t seed = 1;
  int threads = 0;
  std::string output = "out";
};

void add_common_flags(CLI::App* cmd, CommonOptions& opt, bool with_gcv = true) {
  cmd->add_option("--kernel", opt.kernel, "Kernel family: sobolev or gaussian")
      ->check(CLI::IsMember({"sobolev", "gaussian"}));
  cmd->add_option("--order", opt.order, "Sobolev order (1..4)")->check(CLI::Range(1, 4));
  cmd->add_option("--bandwidth", opt.bandwidth,
                  "Gaussian bandwidth (default: median heuristic)");
  cmd->add_option("--sign", opt.sign, "Sobolev sign convention")
      ->check(CLI::IsMember({"auto", "standard", "paper"}));
  if (with_gcv) {
    cmd->add_option("--gcv", opt.gcv, "GCV variant for lambda selection")
        ->check(CLI::IsMember({"paper", "squared"}));
    cmd->add_option("--lambda-grid", opt.lambda_grid, "Explicit lambda grid")->delimiter(',');
  }
  cmd->add_option("--tau-grid", opt.tau_grid, "Explicit tau grid")->delimiter(',');
  cmd->add_option("--folds", opt.folds, "CV folds for tau")->check(CLI::Range(2, 50));
  cmd->add_option("--levels", opt.levels, "Confidence levels")->delimiter(',');
  cmd->add_option("--seed", opt.seed, "Seed for all randomness");
  cmd->add_option("--threads", opt.threads, "Worker threads (0: logical cores)");
  cmd->add_option("--output", opt.output, "Output directory");
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

KernelSpec build_spec(const CommonOptions& opt, const LabeledSample& sample) {
  if (opt.kernel == "gaussian") {
    double bw = opt.bandwidth;
    if (!(bw > 0.0)) {
      auto resp = sample.responder_indices();
      InputScaler scaler = InputScaler::fit(sample.X);
      bw = median_heuristic_bandwidth(scaler.scale(sample.rows(resp)));
    }
    return KernelSpec::gaussian(bw);
  }
  KernelSpec spec = KernelSpec::sobolev(opt.order);
  if (opt.sign == "standard") spec.sign = SobolevSign::StandardSign;
  if (opt.sign == "paper") spec.sign = SobolevSign::PaperSign;
  return spec;
}

GcvVariant parse_gcv(const std::string& s) {
  return s == "paper" ? GcvVariant::PaperLinearTrace : GcvVariant::SquaredTrace;
}

struct LoadedCsv {
  CsvTable table;
  LabeledSample sample;
  int response_column = -1;
};

/// Loads a CSV where `response` is the flagged column: empty cells there are
/// the missing responses, every other cell must be present and numeric.
LoadedCsv load_impute_csv(const std::string& path, const std::string& response) {
  LoadedCsv loaded;
  loaded.table = read_csv(path);
  const CsvTable& t = loaded.table;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    for (std::size_t jj = j + 1; jj < t.header.size(); ++jj) {
      if (t.header[j] == t.header[jj]) throw MalformedCsv("duplicate column '" + t.header[j] + "'");
    }
  }
  int yc = t.column(response);
  if (yc < 0) throw MalformedCsv("response column '" + response + "' not found");
  loaded.response_column = yc;
  int n = static_cast<int>(t.rows.size());
  int d = static_cast<int>(t.header.size()) - 1;
  if (n < 2 || d < 1) throw MalformedCsv("need at least 2 rows and 1 covariate column");

  loaded.sample.X.resize(n, d);
  loaded.sample.y.resize(n);
  loaded.sample.delta.resize(n);
  int observed = 0;
  for (int i = 0; i < n; ++i) {
    int cj = 0;
    for (int j = 0; j < static_cast<int>(t.header.size()); ++j) {
      const std::string& cell = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (j == yc) {
        if (cell.empty()) {
          loaded.sample.delta[i] = 0;
          loaded.sample.y[i] = std::numeric_limits<double>::quiet_NaN();
        } else {
          loaded.sample.delta[i] = 1;
          loaded.sample.y[i] = parse_double(cell);
          ++observed;
        }
      } else {
        if (cell.empty()) {
          throw MissingInCovariates("missing covariate cell at row " + std::to_string(i + 2) +
                                    ", column '" + t.header[static_cast<std::size_t>(j)] + "'");
        }
        loaded.sample.X(i, cj++) = parse_double(cell);
      }
    }
  }
  if (observed == 0) throw AllMissing("response column '" + response + "' has no observed values");
  return loaded;
}

int cmd_impute(const std::string& input, const std::string& response,
               const CommonOptions& opt) {
  LoadedCsv loaded = load_impute_csv(input, response);
  LabeledSample& sample = loaded.sample;
  sample.validate();

  ImputationOptions options;
  options.spec = build_spec(opt, sample);
  options.gcv = parse_gcv(opt.gcv);
  options.lambda_grid = opt.lambda_grid;
  options.tau_grid = opt.tau_grid;
  options.k_folds = opt.folds;
  options.levels = opt.levels;
  options.seed = opt.seed;
  options.threads = resolve_threads(opt.threads);

  PipelineResult result = impute_with_inference(sample, options);

  fs::create_directories(opt.output);

  // Completed CSV: model predictions fill the missing responses.
  CsvTable out = loaded.table;
  out.header.push_back("imputed");
  for (int i = 0; i < sample.n(); ++i) {
    auto& row = out.rows[static_cast<std::size_t>(i)];
    if (sample.delta[i] == 0) {
      row[static_cast<std::size_t>(loaded.response_column)] = format_double(result.m_hat[i]);
      row.push_back("1");
    } else {
      row.push_back("0");
    }
  }
  write_csv((fs::path(opt.output) / "imputed.csv").string(), out);

  // Complete-case benchmark.
  auto resp = sample.responder_indices();
  double cc_mean = 0.0;
  for (int i : resp) cc_mean += sample.y[i];
  cc_mean /= static_cast<double>(resp.size());
  double cc_ss = 0.0;
  for (int i : resp) cc_ss += (sample.y[i] - cc_mean) * (sample.y[i] - cc_mean);
  double cc_var = resp.size() > 1 ? cc_ss / (static_cast<double>(resp.size()) - 1.0) /
                                        static_cast<double>(resp.size())
                                  : 0.0;

  nlohmann::ordered_json j = to_json(result.report);
  nlohmann::ordered_json cc;
  cc["estimate"] = cc_mean;
  cc["std_error"] = std::sqrt(cc_var);
  nlohmann::ordered_json ccis = nlohmann::ordered_json::array();
  for (double level : opt.levels) {
    auto [lo, hi] = confidence_interval(cc_mean, cc_var, level);
    ccis.push_back({{"level", level}, {"lower", lo}, {"upper", hi}});
  }
  cc["confidence_intervals"] = ccis;
  j["complete_case"] = cc;
  write_text_file((fs::path(opt.output) / "report.json").string(), j.dump(2) + "\n");

  std::cout << "theta_hat = " << format_double(result.report.theta_hat)
            << "  se = " << format_double(result.report.std_error)
            << "  (n=" << result.report.n << ", observed=" << result.report.n1 << ")\n";
  for (const auto& [level, ci] : result.report.ci) {
    std::cout << "  " << format_double(level * 100) << "% CI: [" << format_double(ci.first)
              << ", " << format_double(ci.second) << "]\n";
  }
  if (result.report.omega_warning) {
    std::cerr << "WARN: max estimated weight " << format_double(result.report.max_omega)
              << " exceeds the propensity lower-bound diagnostic threshold\n";
  }
  std::cout << "wrote " << opt.output << "/imputed.csv and report.json\n";
  return 0;
}

int cmd_simulate(const std::string& model, int n, int reps,
                 const std::vector<std::string>& methods, int knots,
                 const CommonOptions& opt) {
  SimConfig config;
  config.model = sim_model_from_string(model);
  config.n = n;
  config.replications = reps;
  config.seed = opt.seed;
  if (!methods.empty()) {
    config.methods.clear();
    for (const auto& name : methods) config.methods.push_back(method_from_string(name));
  }
  if (opt.kernel == "gaussian") {
    if (!(opt.bandwidth > 0.0)) {
      throw InvalidArgument("simulate with the gaussian kernel requires --bandwidth");
    }
    config.spec = KernelSpec::gaussian(opt.bandwidth);
  } else {
    config.spec = KernelSpec::sobolev(opt.order);
    if (opt.sign == "standard") config.spec.sign = SobolevSign::StandardSign;
    if (opt.sign == "paper") config.spec.sign = SobolevSign::PaperSign;
  }
  config.gcv = parse_gcv(opt.gcv);
  config.lambda_grid = opt.lambda_grid;
  config.tau_grid = opt.tau_grid;
  config.k_folds = opt.folds;
  config.levels = opt.levels;
  config.bspline_knots = knots;
  config.threads = resolve_threads(opt.threads);

  SimReport report = run_mc(config);

  fs::create_directories(opt.output);
  write_text_file((fs::path(opt.output) / "report.json").string(), to_json(report).dump(2) + "\n");
  write_sim_table_csv((fs::path(opt.output) / "table.csv").string(), report);
  write_sim_replicates_csv((fs::path(opt.output) / "replicates.csv").string(), report);

  std::cout << "model " << model << " n=" << n << " reps=" << reps
            << " theta_true=" << format_double(report.theta_true) << "\n";
  for (const auto& [method, stats] : report.stats) {
    std::cout << "  " << to_string(method) << ": bias=" << format_double(stats.bias)
              << " var=" << format_double(stats.var) << " mse=" << format_double(stats.mse)
              << "\n";
  }
  if (report.vhat_reps.size() > 0) {
    std::cout << "  KRR variance estimator R.B.=" << format_double(report.rel_bias);
    for (const auto& [level, c] : report.coverage) {
      std::cout << "  C.R.(" << format_double(level * 100) << "%)=" << format_double(c * 100)
                << "%";
    }
    std::cout << "\n";
  }
  if (report.failed > 0) {
    std::cerr << "WARN: excluded " << report.failed << " failed replicate(s)\n";
  }
  std::cout << "wrote " << opt.output << "/report.json, table.csv, replicates.csv\n";
  return 0;
}

int cmd_ratio(const std::string& input, const std::string& delta_col,
              const CommonOptions& opt) {
  CsvTable table = read_csv(input);
  int dc = table.column(delta_col);
  if (dc < 0) throw MalformedCsv("delta column '" + delta_col + "' not found");
  int n = static_cast<int>(table.rows.size());
  int d = static_cast<int>(table.header.size()) - 1;
  if (n < 2 || d < 1) throw MalformedCsv("need at least 2 rows and 1 covariate column");

  LabeledSample sample;
  sample.X.resize(n, d);
  sample.y = Eigen::VectorXd::Zero(n);
  sample.delta.resize(n);
  for (int i = 0; i < n; ++i) {
    int cj = 0;
    for (int j = 0; j < static_cast<int>(table.header.size()); ++j) {
      const std::string& cell = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (cell.empty()) throw MalformedCsv("empty cell at row " + std::to_string(i + 2));
      double v = parse_double(cell);
      if (j == dc) {
        if (v != 0.0 && v != 1.0) throw MalformedCsv("delta entries must be 0 or 1");
        sample.delta[i] = static_cast<int>(v);
      } else {
        sample.X(i, cj++) = v;
      }
    }
  }
  sample.validate();

  KernelSpec spec = build_spec(opt, sample);
  fs::create_directories(opt.output);

  Eigen::VectorXd weights;
  double tau_star = 0.0;
  Eigen::VectorXd cv_scores;
  std::vector<double> tau_grid = opt.tau_grid.empty() ? default_tau_grid() : opt.tau_grid;
  if (sample.n0() == 0) {
    std::cerr << "WARN: no missing rows (delta all 1); weights are identically 1\n";
    weights = Eigen::VectorXd::Ones(n);
  } else {
    TauSelection sel = cv_select_tau(sample, spec, tau_grid, opt.folds, opt.seed,
                                     resolve_threads(opt.threads));
    tau_star = sel.tau;
    cv_scores = sel.cv_scores;
    DensityRatioModel model = fit_ratio(sample, spec, tau_star);
    weights = omega_values(model, sample.X);
  }

  CsvTable out = table;
  out.header.push_back("omega");
  out.header.push_back("p_hat");
  for (int i = 0; i < n; ++i) {
    out.rows[static_cast<std::size_t>(i)].push_back(format_double(weights[i]));
    out.rows[static_cast<std::size_t>(i)].push_back(format_double(1.0 / weights[i]));
  }
  write_csv((fs::path(opt.output) / "weights.csv").string(), out);

  nlohmann::ordered_json j;
  j["n"] = n;
  j["n1"] = sample.n1();
  j["n0"] = sample.n0();
  j["tau"] = tau_star;
  j["kernel"] = spec.summary();
  j["max_omega"] = weights.maxCoeff();
  nlohmann::ordered_json cv = nlohmann::ordered_json::array();
  for (Eigen::Index t = 0; t < cv_scores.size(); ++t) {
    cv.push_back({{"tau", tau_grid[static_cast<std::size_t>(t)]}, {"cv_loss", cv_scores[t]}});
  }
  j["cv"] = cv;
  write_text_file((fs::path(opt.output) / "report.json").string(), j.dump(2) + "\n");

  std::cout << "tau = " << format_double(tau_star) << ", wrote " << opt.output
            << "/weights.csv and report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel ridge regression imputation for data with missing responses"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; command-line flags win");

  CommonOptions impute_opt, sim_opt, ratio_opt;

  auto* impute = app.add_subcommand("impute", "Impute a CSV dataset and report the mean");
  std::string input, response;
  impute->add_option("--input", input, "Input CSV")->required();
  impute->add_option("--response", response, "Response column name")->required();
  add_common_flags(impute, impute_opt);

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  std::string model = "A";
  int n = 200, reps = 100, knots = 3;
  std::vector<std::string> methods;
  simulate->add_option("--model", model, "Data model A..F")->required();
  simulate->add_option("--n", n, "Sample size")->required();
  simulate->add_option("--reps", reps, "Monte Carlo replications")->required();
  simulate->add_option("--methods", methods, "Subset of KRR,BSpline,Linear")->delimiter(',');
  simulate->add_option("--knots", knots, "Interior knots per coordinate for the B-spline");
  add_common_flags(simulate, sim_opt);

  auto* ratio = app.add_subcommand("ratio", "Estimate inverse propensity weights");
  std::string ratio_input, delta_col = "delta";
  ratio->add_option("--input", ratio_input, "Input CSV with covariates and a delta column")
      ->required();
  ratio->add_option("--delta", delta_col, "Delta (response indicator) column name");
  add_common_flags(ratio, ratio_opt, /*with_gcv=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (impute->parsed()) return cmd_impute(input, response, impute_opt);
    if (simulate->parsed()) return cmd_simulate(model, n, reps, methods, knots, sim_opt);
    if (ratio->parsed()) return cmd_ratio(ratio_input, delta_col, ratio_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
