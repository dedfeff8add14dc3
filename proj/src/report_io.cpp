#include "krri/report_io.hpp"

#include <fstream>

#include "krri/csv.hpp"
#include "krri/errors.hpp"

namespace krri {

using nlohmann::ordered_json;

ordered_json to_json(const ImputationReport& report) {
  ordered_json j;
  j["theta_hat"] = report.theta_hat;
  j["variance_hat"] = report.variance_hat;
  j["std_error"] = report.std_error;
  ordered_json cis = ordered_json::array();
  for (const auto& [level, interval] : report.ci) {
    cis.push_back({{"level", level},
                   {"lower", interval.first},
                   {"upper", interval.second}});
  }
  j["confidence_intervals"] = cis;
  j["n"] = report.n;
  j["n1"] = report.n1;
  j["n0"] = report.n0;
  j["lambda"] = report.lambda;
  j["tau"] = report.tau;
  j["diagnostics"] = {{"max_omega", report.max_omega},
                      {"omega_warning", report.omega_warning},
                      {"ratio_exponent_clamped", report.ratio_clamped},
                      {"gcv_variant", report.gcv_variant},
                      {"kernel", report.kernel}};
  return j;
}

ordered_json to_json(const SimReport& report) {
  ordered_json j;
  j["model"] = to_string(report.config.model);
  j["n"] = report.config.n;
  j["replications"] = report.replications;
  j["seed"] = report.config.seed;
  j["theta_true"] = report.theta_true;
  j["failed_replicates"] = report.failed;
  j["failed_indices"] = report.failed_indices;
  j["degenerate_variance"] = report.degenerate_variance;

  ordered_json methods = ordered_json::object();
  for (const auto& [method, stats] : report.stats) {
    ordered_json m;
    m["bias"] = stats.bias;
    m["var"] = stats.var;
    m["mse"] = stats.mse;
    m["bias_mc_se"] = stats.bias_se;
    m["var_mc_se"] = stats.var_se;
    m["mse_mc_se"] = stats.mse_se;
    if (stats.out_of_range >= 0) m["imputed_predictions_outside_unit_interval"] = stats.out_of_range;
    methods[to_string(method)] = m;
  }
  j["methods"] = methods;

  if (report.vhat_reps.size() > 0) {
    ordered_json inference;
    inference["vhat_mean"] = report.vhat_mean;
    inference["relative_bias"] = report.rel_bias;
    inference["relative_bias_mc_se"] = report.rel_bias_se;
    ordered_json cov = ordered_json::array();
    for (const auto& [level, c] : report.coverage) {
      cov.push_back({{"level", level},
                     {"coverage", c},
                     {"mc_se", report.coverage_se.at(level)}});
    }
    inference["coverage"] = cov;
    j["krr_inference"] = inference;
  }
  return j;
}

void write_sim_table_csv(const std::string& path, const SimReport& report) {
  CsvTable table;
  table.header = {"model", "n", "criteria"};
  std::vector<Method> methods = report.config.methods;
  for (Method m : methods) table.header.push_back(to_string(m));

  auto row = [&](const std::string& name) {
    std::vector<std::string> r = {to_string(report.config.model),
                                  std::to_string(report.config.n), name};
    return r;
  };
  auto push_criterion = [&](const std::string& name, auto getter) {
    auto r = row(name);
    for (Method m : methods) r.push_back(format_double(getter(report.stats.at(m))));
    table.rows.push_back(r);
  };
  push_criterion("Bias", [](const MethodStats& s) { return s.bias; });
  push_criterion("Var", [](const MethodStats& s) { return s.var; });
  push_criterion("MSE", [](const MethodStats& s) { return s.mse; });

  if (report.vhat_reps.size() > 0) {
    auto r = row("R.B.");
    for (Method m : methods) {
      r.push_back(m == Method::KRR ? format_double(report.rel_bias) : "");
    }
    table.rows.push_back(r);
    for (const auto& [level, c] : report.coverage) {
      auto cr = row("C.R. (" + format_double(level * 100) + "%)");
      for (Method m : methods) {
        cr.push_back(m == Method::KRR ? format_double(c) : "");
      }
      table.rows.push_back(cr);
    }
  }
  write_csv(path, table);
}

void write_sim_replicates_csv(const std::string& path, const SimReport& report) {
  CsvTable table;
  table.header = {"replicate"};
  std::vector<Method> methods = report.config.methods;
  for (Method m : methods) table.header.push_back("theta_" + to_string(m));
  const bool has_krr = report.vhat_reps.size() > 0;
  if (has_krr) {
    table.header.push_back("vhat_KRR");
    table.header.push_back("lambda_KRR");
    table.header.push_back("tau_KRR");
  }
  table.header.push_back("theta_tilde_oracle");

  Eigen::Index rows = report.theta_tilde_reps.size();
  for (Eigen::Index k = 0; k < rows; ++k) {
    std::vector<std::string> r = {std::to_string(k)};
    for (Method m : methods) r.push_back(format_double(report.theta_reps.at(m)[k]));
    if (has_krr) {
      r.push_back(format_double(report.vhat_reps[k]));
      r.push_back(format_double(report.lambda_reps[k]));
      r.push_back(format_double(report.tau_reps[k]));
    }
    r.push_back(format_double(report.theta_tilde_reps[k]));
    table.rows.push_back(r);
  }
  write_csv(path, table);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

}  // namespace krri
