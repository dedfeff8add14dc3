#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "krri/baselines.hpp"
#include "krri/density_ratio.hpp"
#include "krri/errors.hpp"
#include "krri/inference.hpp"
#include "krri/kernels.hpp"
#include "krri/krr.hpp"
#include "krri/numerics.hpp"
#include "krri/simulation.hpp"

namespace py = pybind11;
using namespace krri;

namespace {

KernelSpec make_spec(const std::string& kernel, int order, double bandwidth,
                     const std::string& sign) {
  if (kernel == "sobolev") {
    KernelSpec spec = KernelSpec::sobolev(order);
    if (sign == "paper") {
      spec.sign = SobolevSign::PaperSign;
    } else if (sign == "standard") {
      spec.sign = SobolevSign::StandardSign;
    } else if (sign != "auto") {
      throw InvalidArgument("sign must be 'auto', 'standard' or 'paper'");
    }
    return spec;
  }
  if (kernel == "gaussian") return KernelSpec::gaussian(bandwidth);
  throw InvalidArgument("kernel must be 'sobolev' or 'gaussian'");
}

LabeledSample make_sample(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXi& delta) {
  LabeledSample s;
  s.X = X;
  s.y = y;
  s.delta = delta;
  s.validate();
  return s;
}

GcvVariant gcv_from_string(const std::string& s) {
  if (s == "paper") return GcvVariant::PaperLinearTrace;
  if (s == "squared") return GcvVariant::SquaredTrace;
  throw InvalidArgument("gcv must be 'paper' or 'squared'");
}

py::dict report_to_dict(const ImputationReport& r) {
  py::dict d;
  d["theta_hat"] = r.theta_hat;
  d["variance_hat"] = r.variance_hat;
  d["std_error"] = r.std_error;
  py::dict cis;
  for (const auto& [level, interval] : r.ci) {
    cis[py::cast(level)] = py::make_tuple(interval.first, interval.second);
  }
  d["ci"] = cis;
  d["n"] = r.n;
  d["n1"] = r.n1;
  d["n0"] = r.n0;
  d["lambda"] = r.lambda;
  d["tau"] = r.tau;
  d["max_omega"] = r.max_omega;
  d["omega_warning"] = r.omega_warning;
  d["gcv_variant"] = r.gcv_variant;
  d["kernel"] = r.kernel;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kernel ridge regression imputation with linearization inference";

  py::register_exception<Error>(m, "KrrImputeError");

  m.def("bernoulli_poly", &bernoulli_poly, py::arg("q"), py::arg("x"));
  m.def(
      "sobolev_kernel",
      [](int order, double x, double y, const std::string& sign) {
        SobolevSign s = sign == "paper" ? SobolevSign::PaperSign : SobolevSign::StandardSign;
        return sobolev_kernel(order, x, y, s);
      },
      py::arg("order"), py::arg("x"), py::arg("y"), py::arg("sign") = "standard");
  m.def("gaussian_kernel", &gaussian_kernel, py::arg("bandwidth"), py::arg("x"), py::arg("y"));
  m.def("norm_quantile", &norm_quantile, py::arg("p"));
  m.def("true_theta", [](const std::string& model) { return true_theta(sim_model_from_string(model)); },
        py::arg("model"));

  m.def(
      "gram",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const std::string& kernel,
         int order, double bandwidth, const std::string& sign) {
        KernelSpec spec = make_spec(kernel, order, bandwidth, sign);
        InputScaler scaler = InputScaler::fit(A);
        return gram(spec, scaler, A, B).values;
      },
      py::arg("A"), py::arg("B"), py::arg("kernel") = "sobolev", py::arg("order") = 2,
      py::arg("bandwidth") = 1.0, py::arg("sign") = "auto",
      "Gram matrix with min-max scaling fitted on A.");

  py::class_<KrrModel>(m, "KrrModel")
      .def_property_readonly("lambda_", [](const KrrModel& model) { return model.lambda; })
      .def_property_readonly("coefficients",
                             [](const KrrModel& model) { return model.coefficients; })
      .def("predict", [](const KrrModel& model, const Eigen::MatrixXd& X) {
        return predict(model, X);
      });

  m.def(
      "fit_krr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXi& delta,
         double lam, const std::string& kernel, int order, double bandwidth,
         const std::string& sign) {
        return fit_krr(make_sample(X, y, delta), make_spec(kernel, order, bandwidth, sign), lam);
      },
      py::arg("X"), py::arg("y"), py::arg("delta"), py::arg("lam"),
      py::arg("kernel") = "sobolev", py::arg("order") = 2, py::arg("bandwidth") = 1.0,
      py::arg("sign") = "auto");

  m.def(
      "select_lambda",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXi& delta,
         std::vector<double> grid, const std::string& gcv, const std::string& kernel,
         int order, double bandwidth) {
        LabeledSample sample = make_sample(X, y, delta);
        KernelSpec spec = make_spec(kernel, order, bandwidth, "auto");
        if (grid.empty()) {
          grid = default_lambda_grid(sample.n(), spec.family == KernelFamily::Sobolev ? spec.order : 2);
        }
        LambdaSelection sel = select_lambda(sample, spec, grid, gcv_from_string(gcv));
        return py::make_tuple(sel.lambda, sel.scores, grid);
      },
      py::arg("X"), py::arg("y"), py::arg("delta"), py::arg("grid") = std::vector<double>{},
      py::arg("gcv") = "squared", py::arg("kernel") = "sobolev", py::arg("order") = 2,
      py::arg("bandwidth") = 1.0);

  m.def(
      "density_ratio_weights",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXi& delta, double tau,
         std::vector<double> tau_grid, int k_folds, std::uint64_t seed,
         const std::string& kernel, int order, double bandwidth) {
        LabeledSample sample;
        sample.X = X;
        sample.y = Eigen::VectorXd::Zero(X.rows());
        sample.delta = delta;
        sample.validate();
        KernelSpec spec = make_spec(kernel, order, bandwidth, "auto");
        Eigen::VectorXd weights;
        double tau_star = 0.0;
        if (sample.n0() == 0) {
          weights = Eigen::VectorXd::Ones(X.rows());
        } else {
          tau_star = tau;
          if (!(tau > 0.0)) {
            if (tau_grid.empty()) tau_grid = default_tau_grid();
            tau_star = cv_select_tau(sample, spec, tau_grid, k_folds, seed).tau;
          }
          DensityRatioModel model = fit_ratio(sample, spec, tau_star);
          weights = omega_values(model, X);
        }
        return py::make_tuple(weights, tau_star);
      },
      py::arg("X"), py::arg("delta"), py::arg("tau") = 0.0,
      py::arg("tau_grid") = std::vector<double>{}, py::arg("k_folds") = 5,
      py::arg("seed") = 0, py::arg("kernel") = "sobolev", py::arg("order") = 2,
      py::arg("bandwidth") = 1.0,
      "Estimated inverse propensity weights; tau <= 0 selects tau by CV.");

  m.def(
      "impute",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXi& delta,
         const std::string& kernel, int order, double bandwidth, const std::string& gcv,
         std::vector<double> levels, std::uint64_t seed, int threads) {
        LabeledSample sample = make_sample(X, y, delta);
        ImputationOptions options;
        options.spec = make_spec(kernel, order, bandwidth, "auto");
        options.gcv = gcv_from_string(gcv);
        options.levels = std::move(levels);
        options.seed = seed;
        options.threads = threads;
        PipelineResult result = impute_with_inference(sample, options);
        py::dict d = report_to_dict(result.report);
        d["m_hat"] = result.m_hat;
        d["omega_hat"] = result.omega_hat;
        return d;
      },
      py::arg("X"), py::arg("y"), py::arg("delta"), py::arg("kernel") = "sobolev",
      py::arg("order") = 2, py::arg("bandwidth") = 1.0, py::arg("gcv") = "squared",
      py::arg("levels") = std::vector<double>{0.90, 0.95}, py::arg("seed") = 0,
      py::arg("threads") = 1,
      "Full pipeline: GCV-tuned KRR fit, CV-tuned density ratio, "
      "influence-function variance and confidence intervals.");

  m.def(
      "simulate",
      [](const std::string& model, int n, int replications, std::uint64_t seed,
         std::vector<std::string> methods, const std::string& gcv, int threads) {
        SimConfig config;
        config.model = sim_model_from_string(model);
        config.n = n;
        config.replications = replications;
        config.seed = seed;
        config.gcv = gcv_from_string(gcv);
        config.threads = threads;
        if (!methods.empty()) {
          config.methods.clear();
          for (const auto& name : methods) config.methods.push_back(method_from_string(name));
        }
        SimReport report = run_mc(config);
        py::dict d;
        d["theta_true"] = report.theta_true;
        d["failed"] = report.failed;
        py::dict per_method;
        for (const auto& [method, stats] : report.stats) {
          py::dict s;
          s["bias"] = stats.bias;
          s["var"] = stats.var;
          s["mse"] = stats.mse;
          per_method[py::cast(to_string(method))] = s;
        }
        d["methods"] = per_method;
        if (report.vhat_reps.size() > 0) {
          d["relative_bias"] = report.rel_bias;
          py::dict cov;
          for (const auto& [level, c] : report.coverage) cov[py::cast(level)] = c;
          d["coverage"] = cov;
        }
        return d;
      },
      py::arg("model"), py::arg("n"), py::arg("replications"), py::arg("seed") = 1,
      py::arg("methods") = std::vector<std::string>{}, py::arg("gcv") = "squared",
      py::arg("threads") = 0);
}
