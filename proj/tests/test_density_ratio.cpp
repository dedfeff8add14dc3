#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "krri/density_ratio.hpp"
#include "krri/errors.hpp"
#include "krri/numerics.hpp"
#include "krri/rng.hpp"
#include "support/oracles.hpp"

using namespace krri;

namespace {

LabeledSample coin_flip_sample(int n, int d, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, StreamTag::Misc);
  LabeledSample s;
  s.X.resize(n, d);
  s.y = Eigen::VectorXd::Zero(n);
  s.delta.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) s.X(i, j) = rng.uniform(1.0, 3.0);
    s.delta[i] = rng.bernoulli(0.5);
  }
  s.delta[0] = 1;
  s.delta[1] = 0;
  return s;
}

Eigen::VectorXd pack(double alpha0, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd z(alpha.size() + 1);
  z[0] = alpha0;
  z.tail(alpha.size()) = alpha;
  return z;
}

}  // namespace

TEST_CASE("objective value at the zero point") {
  LabeledSample s = coin_flip_sample(12, 2, 7);
  ObjectiveEval eval = dr_objective(s, KernelSpec::sobolev(2), 0.8, 0.0,
                                    Eigen::VectorXd::Zero(12));
  CHECK(eval.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(eval.gradient[0] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("analytic gradient matches finite differences") {
  KernelSpec spec = KernelSpec::sobolev(2);
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    LabeledSample s = coin_flip_sample(8, 2, seed);
    Rng rng = Rng::stream(seed, StreamTag::Misc, 99);
    Eigen::VectorXd alpha(8);
    for (int i = 0; i < 8; ++i) alpha[i] = rng.uniform(-0.5, 0.5);
    double alpha0 = rng.uniform(-0.5, 0.5);
    double tau = 0.3;

    ObjectiveEval eval = dr_objective(s, spec, tau, alpha0, alpha);
    auto value_only = [&](const Eigen::VectorXd& z) {
      return dr_objective(s, spec, tau, z[0], z.tail(8)).value;
    };
    Eigen::VectorXd z = pack(alpha0, alpha);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double h = 1e-6 * (1.0 + std::abs(z[i]));
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      double fd = (value_only(zp) - value_only(zm)) / (2.0 * h);
      double denom = std::max(1e-8, std::abs(fd));
      CHECK(std::abs(eval.gradient[i] - fd) / denom < 1e-5);
    }
  }
}

TEST_CASE("doubling alpha quadruples the penalty contribution") {
  LabeledSample s = coin_flip_sample(10, 1, 17);
  KernelSpec spec = KernelSpec::sobolev(2);
  Rng rng = Rng::stream(18, StreamTag::Misc);
  Eigen::VectorXd alpha(10);
  for (int i = 0; i < 10; ++i) alpha[i] = rng.uniform(-0.3, 0.3);
  double tau = 0.7;
  double pen1 = dr_objective(s, spec, tau, 0.2, alpha).value -
                dr_objective(s, spec, 0.0, 0.2, alpha).value;
  double pen2 = dr_objective(s, spec, tau, 0.2, (2.0 * alpha).eval()).value -
                dr_objective(s, spec, 0.0, 0.2, (2.0 * alpha).eval()).value;
  CHECK(pen2 == doctest::Approx(4.0 * pen1).epsilon(1e-10));
}

TEST_CASE("identical response and nonresponse distributions give a flat ratio") {
  // delta assigned by fair coin to iid points; g should be near 1 everywhere.
  LabeledSample s = coin_flip_sample(200, 4, 2024);
  DensityRatioModel model = fit_ratio(s, KernelSpec::sobolev(2), 1.0);
  Eigen::VectorXd g = g_values(model, s.X);
  CHECK((g.array() - 1.0).abs().maxCoeff() < 0.25);
}

TEST_CASE("optimizer achieves descent from the zero start") {
  LabeledSample s = coin_flip_sample(40, 2, 33);
  KernelSpec spec = KernelSpec::sobolev(2);
  double tau = 0.05;
  DensityRatioModel model = fit_ratio(s, spec, tau);
  double at_zero = dr_objective(s, spec, tau, 0.0, Eigen::VectorXd::Zero(40)).value;
  double at_fit = dr_objective(s, spec, tau, model.alpha0, model.alpha).value;
  CHECK(at_fit <= at_zero);
}

TEST_CASE("masked two-coefficient problem matches a grid-search oracle") {
  LabeledSample s;
  s.X.resize(6, 1);
  s.X << 1.0, 1.3, 1.7, 2.2, 2.6, 3.0;
  s.y = Eigen::VectorXd::Zero(6);
  s.delta.resize(6);
  s.delta << 1, 0, 1, 1, 0, 1;
  KernelSpec spec = KernelSpec::sobolev(2);
  double tau = 0.1;

  auto masked = [&](double a1, double a2) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(6);
    alpha[1] = a1;
    alpha[4] = a2;
    return dr_objective(s, spec, tau, 0.0, alpha).value;
  };
  auto wrapped = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(6);
    alpha[1] = z[0];
    alpha[4] = z[1];
    ObjectiveEval eval = dr_objective(s, spec, tau, 0.0, alpha);
    g.resize(2);
    g[0] = eval.gradient[2];
    g[1] = eval.gradient[5];
    return eval.value;
  };
  OptimResult r = minimize(wrapped, Eigen::VectorXd::Zero(2), {.gtol = 1e-10, .max_iter = 500});
  double oracle_min = oracle::grid_search_2d(masked, -4.0, 4.0, 300);
  CHECK(std::abs(r.objective_value - oracle_min) < 1e-3);
}

TEST_CASE("normalize_alpha0 closed form") {
  LabeledSample s = coin_flip_sample(14, 2, 44);
  KernelSpec spec = KernelSpec::sobolev(2);
  CHECK(normalize_alpha0(s, spec, Eigen::VectorXd::Zero(14)) ==
        doctest::Approx(0.0).epsilon(1e-14));

  Rng rng = Rng::stream(45, StreamTag::Misc);
  Eigen::VectorXd alpha(14);
  for (int i = 0; i < 14; ++i) alpha[i] = rng.uniform(-0.4, 0.4);
  double a0 = normalize_alpha0(s, spec, alpha);

  // Plugging back satisfies the responder-sum constraint to 1e-10 relative.
  InputScaler scaler = InputScaler::fit(s.X);
  auto resp = s.responder_indices();
  Eigen::MatrixXd G = gram(spec, scaler, s.rows(resp), s.X).values;
  double total = ((G * alpha).array() + a0).exp().sum();
  CHECK(std::abs(total - static_cast<double>(resp.size())) <=
        1e-10 * static_cast<double>(resp.size()));
}

TEST_CASE("shifting the kernel expansion shifts alpha0 in the opposite direction") {
  // With a constant c added to every s_i, alpha0 drops by c. Realize the
  // shift through the log-sum-exp identity directly.
  LabeledSample s = coin_flip_sample(10, 1, 46);
  KernelSpec spec = KernelSpec::sobolev(2);
  Rng rng = Rng::stream(47, StreamTag::Misc);
  Eigen::VectorXd alpha(10);
  for (int i = 0; i < 10; ++i) alpha[i] = rng.uniform(-0.3, 0.3);

  InputScaler scaler = InputScaler::fit(s.X);
  auto resp = s.responder_indices();
  Eigen::MatrixXd G = gram(spec, scaler, s.rows(resp), s.X).values;
  Eigen::VectorXd sv = G * alpha;
  auto lse_alpha0 = [&](const Eigen::VectorXd& v) {
    double m = v.maxCoeff();
    return std::log(static_cast<double>(v.size())) - (m + std::log((v.array() - m).exp().sum()));
  };
  double base = lse_alpha0(sv);
  double shifted = lse_alpha0((sv.array() + 2.5).matrix());
  CHECK(shifted == doctest::Approx(base - 2.5).epsilon(1e-12));
  CHECK(normalize_alpha0(s, spec, alpha) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("post-normalization responder average of g equals one") {
  for (std::uint64_t seed : {60, 61, 62}) {
    LabeledSample s = coin_flip_sample(30, 2, seed);
    DensityRatioModel model = fit_ratio(s, KernelSpec::sobolev(2), 0.2);
    double acc = 0.0;
    int n1 = 0;
    Eigen::VectorXd g = g_values(model, s.X);
    for (int i = 0; i < s.n(); ++i) {
      if (s.delta[i] == 1) {
        acc += g[i];
        ++n1;
      }
    }
    CHECK(std::abs(acc / n1 - 1.0) <= 1e-10);
  }
}

TEST_CASE("omega identities") {
  LabeledSample s = coin_flip_sample(12, 1, 70);
  KernelSpec spec = KernelSpec::sobolev(2);

  // alpha = 0, alpha0 = 0 means g = 1 so omega = n / n1 everywhere.
  DensityRatioModel flat;
  flat.spec = spec;
  flat.scaler = InputScaler::fit(s.X);
  flat.support_points = s.X;
  flat.alpha = Eigen::VectorXd::Zero(12);
  flat.alpha0 = 0.0;
  flat.n0 = s.n0();
  flat.n1 = s.n1();
  double expected = static_cast<double>(s.n()) / s.n1();
  CHECK(omega(flat, s.X.row(0).transpose()) == doctest::Approx(expected).epsilon(1e-14));

  // Degenerate full-response path.
  LabeledSample full = s;
  full.delta.setOnes();
  DensityRatioModel unit = DensityRatioModel::unit(spec, full);
  CHECK(omega_values(unit, full.X).minCoeff() == 1.0);
  CHECK(omega_values(unit, full.X).maxCoeff() == 1.0);

  // Fitted weights stay strictly above 1 when missingness exists.
  DensityRatioModel fitted = fit_ratio(s, spec, 0.5);
  Eigen::VectorXd w = omega_values(fitted, s.X);
  CHECK(w.minCoeff() > 1.0);
}

TEST_CASE("stratified folds balance both strata") {
  Eigen::VectorXi delta(23);
  for (int i = 0; i < 23; ++i) delta[i] = i % 3 == 0 ? 0 : 1;
  auto folds = stratified_folds(delta, 5, 99);
  CHECK(folds.size() == 5);
  std::vector<int> seen(23, 0);
  std::vector<int> count0(5, 0), count1(5, 0);
  for (std::size_t k = 0; k < folds.size(); ++k) {
    for (int idx : folds[k]) {
      seen[static_cast<std::size_t>(idx)] += 1;
      (delta[idx] == 0 ? count0 : count1)[k] += 1;
    }
  }
  for (int c : seen) CHECK(c == 1);  // a partition
  auto spread = [](const std::vector<int>& v) {
    int lo = v[0], hi = v[0];
    for (int x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return hi - lo;
  };
  CHECK(spread(count0) <= 1);
  CHECK(spread(count1) <= 1);
}

TEST_CASE("cv achieves zero loss on a separable response mechanism") {
  // delta is a deterministic threshold of x; the ratio model can classify
  // held-out points perfectly at some tau.
  int n = 60;
  LabeledSample s;
  s.X.resize(n, 1);
  s.y = Eigen::VectorXd::Zero(n);
  s.delta.resize(n);
  Rng rng = Rng::stream(123, StreamTag::Misc);
  for (int i = 0; i < n; ++i) {
    s.X(i, 0) = rng.uniform(0.0, 1.0);
    s.delta[i] = s.X(i, 0) < 0.55 ? 1 : 0;
  }
  TauSelection sel = cv_select_tau(s, KernelSpec::sobolev(2), default_tau_grid(), 5, 7);
  CHECK(sel.cv_scores.minCoeff() == 0.0);
}

TEST_CASE("cv tau selection basics") {
  LabeledSample s = coin_flip_sample(40, 2, 81);
  KernelSpec spec = KernelSpec::sobolev(2);
  TauSelection single = cv_select_tau(s, spec, {0.3}, 4, 5);
  CHECK(single.tau == 0.3);

  // Ties resolve toward the larger tau.
  TauSelection sel = cv_select_tau(s, spec, default_tau_grid(), 5, 5);
  double best = sel.cv_scores.minCoeff();
  auto grid = default_tau_grid();
  double largest_argmin = 0.0;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    if (sel.cv_scores[static_cast<Eigen::Index>(t)] == best) {
      largest_argmin = std::max(largest_argmin, grid[t]);
    }
  }
  CHECK(sel.tau == largest_argmin);

  Eigen::VectorXi tiny(6);
  tiny << 1, 1, 1, 1, 1, 0;
  CHECK_THROWS_AS(stratified_folds(tiny, 5, 1), InvalidArgument);
}

TEST_CASE("objective is convex along random segments") {
  LabeledSample s = coin_flip_sample(15, 2, 90);
  KernelSpec spec = KernelSpec::sobolev(2);
  double tau = 0.15;
  Rng rng = Rng::stream(91, StreamTag::Misc);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd za(16), zb(16);
    for (int i = 0; i < 16; ++i) {
      za[i] = rng.uniform(-1.0, 1.0);
      zb[i] = rng.uniform(-1.0, 1.0);
    }
    auto value = [&](const Eigen::VectorXd& z) {
      return dr_objective(s, spec, tau, z[0], z.tail(15)).value;
    };
    double mid = value((0.5 * (za + zb)).eval());
    CHECK(mid <= 0.5 * (value(za) + value(zb)) + 1e-10);
  }
}

TEST_CASE("input validation") {
  LabeledSample s = coin_flip_sample(10, 1, 95);
  KernelSpec spec = KernelSpec::sobolev(2);
  CHECK_THROWS_AS(fit_ratio(s, spec, 0.0), InvalidArgument);
  CHECK_THROWS_AS(dr_objective(s, spec, -1.0, 0.0, Eigen::VectorXd::Zero(10)),
                  InvalidArgument);
  LabeledSample all_resp = s;
  all_resp.delta.setOnes();
  CHECK_THROWS_AS(fit_ratio(all_resp, spec, 0.5), InvalidArgument);
}
