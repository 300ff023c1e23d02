#include "doctest.h"

#include <cmath>

#include "qdaw/fitmath.hpp"
#include "qdaw/models.hpp"
#include "qdaw/rng.hpp"

using namespace qdaw;
using namespace qdaw::models;

namespace {

// Gamma and beta samplers for the synthetic-data oracle (Marsaglia-Tsang).
double sample_gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    const double u = rng.next_unit();
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_unit();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(Rng& rng, double a, double b) {
  const double ga = sample_gamma(rng, a);
  const double gb = sample_gamma(rng, b);
  return ga / (ga + gb);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("special functions") {
  const double euler = 0.57721566490153286;
  CHECK(fit::digamma(1.0) == doctest::Approx(-euler).epsilon(1e-10));
  CHECK(fit::digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-10));
  CHECK(fit::trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-10));
  // recurrence psi(x+1) = psi(x) + 1/x
  for (double x : {0.3, 1.7, 4.2, 11.0}) {
    CHECK(fit::digamma(x + 1.0) == doctest::Approx(fit::digamma(x) + 1.0 / x).epsilon(1e-10));
    CHECK(fit::trigamma(x + 1.0) ==
          doctest::Approx(fit::trigamma(x) - 1.0 / (x * x)).epsilon(1e-10));
  }
}

TEST_CASE("BFGS and Levenberg-Marquardt basics") {
  const auto f = [](const Eigen::VectorXd& x) {
    return (x(0) - 3.0) * (x(0) - 3.0) + 2.0 * (x(1) + 1.0) * (x(1) + 1.0);
  };
  const auto g = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::Vector2d grad(2.0 * (x(0) - 3.0), 4.0 * (x(1) + 1.0));
    return grad;
  };
  const auto r = fit::bfgs(f, g, Eigen::Vector2d(0.0, 0.0));
  CHECK(r.x(0) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(-1.0).epsilon(1e-6));

  // LM on y = a x^b.
  std::vector<double> xs = {1, 2, 3, 4, 5, 6};
  const auto residuals = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd res(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      res(i) = 2.0 * std::pow(xs[i], 1.5) - v(0) * std::pow(xs[i], v(1));
    return res;
  };
  const auto jacobian = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd j(xs.size(), 2);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      j(i, 0) = -std::pow(xs[i], v(1));
      j(i, 1) = -v(0) * std::pow(xs[i], v(1)) * std::log(xs[i]);
    }
    return j;
  };
  const auto lm = fit::levenberg_marquardt(residuals, jacobian, Eigen::Vector2d(1.0, 1.0));
  CHECK(lm.params(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(lm.params(1) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(lm.residual_sum < 1e-10);
}

TEST_CASE("beta regression: gradient matches central finite differences") {
  Rng rng(4711);
  std::vector<BetaObservation> obs;
  for (int i = 0; i < 40; ++i) {
    const double n = 5 + rng.next_int(0, 6);
    const double d = 1 + rng.next_int(0, 2);
    obs.push_back({0.05 + 0.9 * rng.next_unit(), n, d});
  }
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector4d theta(rng.next_unit() - 0.5, 0.2 * (rng.next_unit() - 0.5),
                          0.3 * (rng.next_unit() - 0.5), 5.0 + 150.0 * rng.next_unit());
    const Eigen::Vector4d g = beta_log_likelihood_gradient(obs, theta);
    for (int k = 0; k < 4; ++k) {
      const double h = std::max(1e-6, 1e-7 * std::abs(theta(k)));
      Eigen::Vector4d hi = theta, lo = theta;
      hi(k) += h;
      lo(k) -= h;
      const double fd =
          (beta_log_likelihood(obs, hi) - beta_log_likelihood(obs, lo)) / (2.0 * h);
      CHECK(g(k) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("beta regression: recovers planted parameters from sampled data") {
  const double alpha = 0.5, beta_n = -0.2, gamma_d = 0.3, phi = 50.0;
  Rng rng(2024);
  std::vector<BetaObservation> obs;
  for (int i = 0; i < 2000; ++i) {
    const double n = 5 + rng.next_int(0, 7);
    const double d = 1 + rng.next_int(0, 2);
    const double mu = sigmoid(alpha + beta_n * n + gamma_d * d);
    obs.push_back({sample_beta(rng, mu * phi, (1.0 - mu) * phi), n, d});
  }
  const auto model = fit_beta(obs);
  CHECK(model.alpha == doctest::Approx(alpha).epsilon(0.1));
  CHECK(std::abs(model.alpha - alpha) < 0.05);
  CHECK(std::abs(model.beta_n - beta_n) < 0.05);
  CHECK(std::abs(model.gamma_d - gamma_d) < 0.05);
  CHECK(model.phi > 30.0);
  CHECK(model.phi < 80.0);
}

TEST_CASE("beta regression: noiseless data is reproduced to high precision") {
  std::vector<BetaObservation> obs;
  for (int n = 5; n <= 9; ++n)
    for (int d = 1; d <= 3; ++d)
      for (int rep = 0; rep < 4; ++rep)
        obs.push_back({sigmoid(0.4 - 0.15 * n + 0.25 * d), static_cast<double>(n),
                       static_cast<double>(d)});
  const auto model = fit_beta(obs);
  double residual = 0.0;
  for (const auto& o : obs) {
    const double e = o.y - model.predict(o.n, o.d);
    residual += e * e;
  }
  CHECK(residual < 1e-8);
}

TEST_CASE("beta regression: trivial predictions and errors") {
  BetaRegModel flat;
  flat.phi = 10.0;
  CHECK(flat.predict(7.0, 2.0) == doctest::Approx(0.5));

  BetaRegModel declining;
  declining.beta_n = -0.3;
  declining.phi = 10.0;
  CHECK(declining.predict(6.0, 1.0) > declining.predict(9.0, 1.0));

  std::vector<BetaObservation> constant(25, {0.5, 5.0, 1.0});
  CHECK_THROWS_AS(fit_beta(constant), FitError);
  std::vector<BetaObservation> few = {{0.4, 5, 1}, {0.6, 6, 1}};
  CHECK_THROWS_AS(fit_beta(few), FitError);
}

TEST_CASE("power law: exact cases and planted recovery") {
  // Baseline reproduction at n = b.
  std::vector<PowerLawObservation> flat;
  for (int n = 5; n <= 9; ++n)
    for (int d = 1; d <= 2; ++d) flat.push_back({d == 1 ? 0.8 : 0.6, static_cast<double>(n), d});
  const auto flat_model = fit_power_law(flat);
  CHECK(flat_model.predict(5.0, 1) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(flat_model.predict(5.0, 2) == doctest::Approx(0.6).epsilon(1e-9));
  // Flat data: predictions constant in n.
  CHECK(flat_model.predict(9.0, 1) == doctest::Approx(flat_model.predict(5.0, 1)).epsilon(1e-6));

  // Planted (alpha, beta) recovery.
  const double alpha = 0.2, beta = -1.3;
  std::vector<PowerLawObservation> obs;
  const double ybar[3] = {0.0, 0.9, 0.75};
  for (int n = 5; n <= 11; ++n)
    for (int d = 1; d <= 2; ++d)
      obs.push_back({ybar[d] * std::pow(1.0 + alpha * (n - 5), beta), static_cast<double>(n), d});
  const auto model = fit_power_law(obs);
  CHECK(model.residual_sum < 1e-8);
  CHECK(std::abs(model.alpha - alpha) < 0.1 * std::abs(alpha));
  CHECK(std::abs(model.beta - beta) < 0.1 * std::abs(beta));

  // Unseen layer count is an error; out-of-domain predictions clamp.
  CHECK_THROWS_AS(model.predict(7.0, 5), UntrainedModelError);
  ClampCounter clamps;
  PowerLawModel wild = model;
  wild.alpha = -0.5;  // base goes negative above n = 7
  (void)wild.predict(12.0, 1, &clamps);
  CHECK(clamps.clamped == 1);

  std::vector<PowerLawObservation> one_size = {{0.5, 5, 1}, {0.6, 5, 1}, {0.7, 5, 1}, {0.4, 5, 1}};
  CHECK_THROWS_AS(fit_power_law(one_size), FitError);
}

TEST_CASE("degradation model: identities, recovery, limits") {
  DegradationModel zero;
  CHECK(zero.predict(0.8, 0.3, 6, 10, 20, 2.0) == doctest::Approx(0.8));

  const double beta = 0.002, gamma = 0.004;
  std::vector<DegradationObservation> obs;
  for (int n = 5; n <= 8; ++n) {
    for (int d_cx : {4, 10, 16}) {
      for (double l : {0.5, 1.0, 2.0}) {
        const int n_cx = 2 * d_cx;
        const double f_ideal = 0.9, lb = 0.4;
        const double f_noisy = lb + (f_ideal - lb) * std::pow(1.0 - l * beta, n * d_cx) *
                                        std::pow(1.0 - l * gamma, n_cx);
        obs.push_back({f_noisy, f_ideal, lb, static_cast<double>(n), d_cx, n_cx, l});
      }
    }
  }
  const auto model = fit_degradation(obs);
  CHECK(model.residual_sum < 1e-8);
  CHECK(model.beta_depth == doctest::Approx(beta).epsilon(1e-4));
  CHECK(model.gamma_count == doctest::Approx(gamma).epsilon(1e-4));

  // l = 0 is the exact identity.
  CHECK(model.predict(0.77, 0.3, 6, 12, 24, 0.0) == 0.77);
  // Deep circuits decay to the lower bound.
  CHECK(model.predict(0.9, 0.4, 12, 4000, 8000, 2.0) == doctest::Approx(0.4).epsilon(1e-6));

  // Data below the lower bound pulls the fit onto the constraint boundary
  // (shallow circuits keep the optimum off the interior plateau).
  std::vector<DegradationObservation> pinned;
  for (int k = 0; k < 6; ++k)
    pinned.push_back({0.2, 0.9, 0.4, 1.0, 1, 1, 1.0});
  CHECK_THROWS_AS(fit_degradation(pinned), FitError);
}

TEST_CASE("runtime model") {
  std::vector<std::pair<double, double>> data;
  for (double d : {4.0, 8.0, 16.0, 32.0, 64.0}) data.push_back({d, 2.0 * std::pow(d, 1.5)});
  const auto model = fit_runtime(data);
  CHECK(std::exp(model.log_alpha) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(model.beta == doctest::Approx(1.5).epsilon(0.01));
  CHECK(model.r_squared == doctest::Approx(1.0));
  CHECK(model.predict(10.0) == doctest::Approx(2.0 * std::pow(10.0, 1.5)).epsilon(1e-9));

  std::vector<std::pair<double, double>> degenerate = {{4.0, 1.0}, {4.0, 2.0}};
  CHECK_THROWS_AS(fit_runtime(degenerate), FitError);
  std::vector<std::pair<double, double>> zero_depth = {{0.0, 1.0}, {4.0, 2.0}};
  CHECK_THROWS_AS(fit_runtime(zero_depth), FitError);
}

TEST_CASE("bundle: quality prediction paths") {
  ModelBundle bundle;
  LevelModels ideal;
  PowerLawModel power;
  power.baseline_n = 5.0;
  power.layer_baselines = {{1, 1.0}, {2, 0.0}};
  power.alpha = 0.0;
  power.beta = 0.0;
  ideal.power = power;
  ideal.chosen = QualityModelKind::Power;
  bundle.levels[0.0] = ideal;

  InstanceFeatures features;
  features.n = 6;
  features.d = 1;
  features.d_cx = 10;
  features.n_cx = 20;
  features.lb = 2.0;
  features.ub = 6.0;

  // Y = 1 maps to ub, Y = 0 maps to lb.
  CHECK(bundle.predict_quality(features, 0.0) == doctest::Approx(6.0));
  features.d = 2;
  CHECK(bundle.predict_quality(features, 0.0) == doctest::Approx(2.0));

  // With a degradation model, noisy predictions never exceed ideal ones.
  DegradationModel degradation;
  degradation.beta_depth = 0.003;
  degradation.gamma_count = 0.002;
  bundle.degradation = degradation;
  features.d = 1;
  const double ideal_f = bundle.predict_quality(features, 0.0);
  const double noisy_f = bundle.predict_quality(features, 1.0);
  CHECK(noisy_f <= ideal_f);
  CHECK(noisy_f >= features.lb);

  CHECK_THROWS_AS(bundle.predict_runtime(10.0, 0.0), UntrainedModelError);
  RuntimeModel runtime;
  runtime.log_alpha = std::log(2.0);
  runtime.beta = 1.0;
  bundle.levels[0.0].runtime = runtime;
  CHECK(bundle.predict_runtime(10.0, 0.0) == doctest::Approx(20.0));
}

TEST_CASE("evaluate: perfect and constant predictors") {
  ModelBundle bundle;
  LevelModels level;
  PowerLawModel power;
  power.baseline_n = 5.0;
  power.layer_baselines = {{1, 0.7}};
  level.power = power;
  BetaRegModel flat;
  flat.phi = 10.0;  // predicts 0.5 everywhere
  level.beta = flat;
  level.chosen = QualityModelKind::Power;
  bundle.levels[0.0] = level;

  std::vector<Observation> perfect;
  for (int i = 0; i < 10; ++i) {
    Observation o;
    o.instance_id = "i" + std::to_string(i);
    o.y = 0.7;
    o.n = 5 + i % 3;
    o.d = 1;
    perfect.push_back(o);
  }
  const auto e = evaluate_direct(bundle, QualityModelKind::Power, perfect, 0.0);
  CHECK(e.rmse == doctest::Approx(0.0));
  CHECK(e.mean_residual == doctest::Approx(0.0));

  std::vector<Observation> balanced = perfect;
  for (std::size_t i = 0; i < balanced.size(); ++i) balanced[i].y = i % 2 ? 1.0 : 0.0;
  const auto c = evaluate_direct(bundle, QualityModelKind::Beta, balanced, 0.0);
  CHECK(c.rmse == doctest::Approx(0.5));
}

TEST_CASE("learning curve: full fraction has ratio exactly 1") {
  Rng rng(99);
  ScopeData scope;
  scope.name = "test";
  for (int inst = 0; inst < 40; ++inst) {
    for (int d = 1; d <= 2; ++d) {
      Observation o;
      o.instance_id = "inst" + std::to_string(inst);
      o.n = 5 + inst % 3;
      o.d = d;
      o.y = std::clamp(0.9 * std::pow(1.0 + 0.15 * (o.n - 5), -1.1) +
                           0.02 * (rng.next_unit() - 0.5),
                       0.0, 1.0);
      scope.train.push_back(o);
    }
  }
  for (int inst = 0; inst < 10; ++inst) {
    for (int d = 1; d <= 2; ++d) {
      Observation o;
      o.instance_id = "x" + std::to_string(inst);
      o.n = 8 + inst % 2;
      o.d = d;
      o.y = std::clamp(0.9 * std::pow(1.0 + 0.15 * (o.n - 5), -1.1) +
                           0.02 * (rng.next_unit() - 0.5),
                       0.0, 1.0);
      scope.extrapolation.push_back(o);
    }
  }
  const auto curve = learning_curve({scope}, {0.5, 1.0}, 7);
  REQUIRE(curve.size() == 2);
  CHECK(curve[1].fraction == doctest::Approx(1.0));
  CHECK(curve[1].mean_ratio == doctest::Approx(1.0));
  CHECK(curve[0].n_records < curve[1].n_records);
  CHECK_THROWS_AS(learning_curve({scope}, {1.0}, 7), FitError);
}

TEST_CASE("bundle JSON round trip") {
  ModelBundle bundle;
  LevelModels level;
  BetaRegModel beta;
  beta.alpha = 0.3;
  beta.beta_n = -0.11;
  beta.gamma_d = 0.07;
  beta.phi = 42.5;
  beta.n_obs = 120;
  level.beta = beta;
  PowerLawModel power;
  power.baseline_n = 5;
  power.layer_baselines = {{1, 0.9}, {2, 0.8}, {3, 0.7}};
  power.alpha = 0.21;
  power.beta = -1.4;
  power.n_obs = 120;
  level.power = power;
  RuntimeModel runtime;
  runtime.log_alpha = -2.5;
  runtime.beta = 1.2;
  runtime.r_squared = 0.97;
  runtime.n_obs = 120;
  level.runtime = runtime;
  level.chosen = QualityModelKind::Power;
  level.rmse = {{"beta_holdout", 0.07}, {"power_holdout", 0.05}};
  level.train_records = 120;
  bundle.levels[0.0] = level;
  bundle.levels[1.0] = level;
  DegradationModel degradation;
  degradation.beta_depth = 0.0021;
  degradation.gamma_count = 0.0042;
  degradation.n_obs = 300;
  bundle.degradation = degradation;
  bundle.degradation_mode = "measured_ideal";

  const auto j = bundle_to_json(bundle);
  const auto restored = bundle_from_json(nlohmann::json::parse(j.dump()));
  CHECK(restored.levels.size() == 2);
  CHECK(restored.levels.at(0.0).chosen == QualityModelKind::Power);
  CHECK(restored.levels.at(0.0).beta->phi == doctest::Approx(42.5));
  CHECK(restored.levels.at(0.0).power->layer_baselines.at(2) == doctest::Approx(0.8));
  CHECK(restored.levels.at(0.0).runtime->r_squared == doctest::Approx(0.97));
  CHECK(restored.degradation->gamma_count == doctest::Approx(0.0042));
  CHECK(restored.degradation_mode == "measured_ideal");

  InstanceFeatures f;
  f.n = 7;
  f.d = 2;
  f.d_cx = 12;
  f.n_cx = 30;
  f.lb = 1.0;
  f.ub = 3.0;
  CHECK(restored.predict_quality(f, 1.0) == doctest::Approx(bundle.predict_quality(f, 1.0)));
}
