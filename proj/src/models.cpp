#include "qdaw/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "qdaw/fitmath.hpp"
#include "qdaw/rng.hpp"

namespace qdaw::models {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_unit(double y, ClampCounter* clamps) {
  if (clamps) ++clamps->total;
  if (y < 0.0 || y > 1.0) {
    if (clamps) ++clamps->clamped;
    return std::clamp(y, 0.0, 1.0);
  }
  return y;
}

struct RunningStats {
  double sq_sum = 0.0;
  double sum = 0.0;
  int count = 0;

  void add(double residual) {
    sq_sum += residual * residual;
    sum += residual;
    ++count;
  }
  EvalEntry finish() const {
    if (count == 0) return {};
    return {std::sqrt(sq_sum / count), sum / count, count};
  }
};

double model_rmse(const LevelModels& models, QualityModelKind kind,
                  const std::vector<Observation>& obs, ClampCounter* clamps) {
  RunningStats stats;
  for (const auto& o : obs) {
    double pred = 0.0;
    if (kind == QualityModelKind::Beta) {
      if (!models.beta) throw UntrainedModelError("beta model not trained");
      pred = models.beta->predict(o.n, o.d);
    } else {
      if (!models.power) throw UntrainedModelError("power-law model not trained");
      pred = models.power->predict(o.n, o.d, clamps);
    }
    stats.add(o.y - pred);
  }
  const auto entry = stats.finish();
  if (entry.count == 0) throw FitError("evaluate: empty test set");
  return entry.rmse;
}

}  // namespace

std::string_view to_string(QualityModelKind kind) {
  return kind == QualityModelKind::Beta ? "beta" : "power";
}

// ---------------------------------------------------------------------------
// Beta regression

double BetaRegModel::predict(double n, double d) const {
  return sigmoid(alpha + beta_n * n + gamma_d * d);
}

double beta_log_likelihood(const std::vector<BetaObservation>& obs, const Eigen::Vector4d& theta) {
  const double phi = theta(3);
  if (!(phi > 0.0)) return -std::numeric_limits<double>::infinity();
  double ll = 0.0;
  for (const auto& o : obs) {
    const double mu =
        std::clamp(sigmoid(theta(0) + theta(1) * o.n + theta(2) * o.d), 1e-15, 1.0 - 1e-15);
    ll += std::lgamma(phi) - std::lgamma(mu * phi) - std::lgamma((1.0 - mu) * phi) +
          (mu * phi - 1.0) * std::log(o.y) + ((1.0 - mu) * phi - 1.0) * std::log1p(-o.y);
  }
  return ll;
}

Eigen::Vector4d beta_log_likelihood_gradient(const std::vector<BetaObservation>& obs,
                                             const Eigen::Vector4d& theta) {
  const double phi = theta(3);
  Eigen::Vector4d g = Eigen::Vector4d::Zero();
  for (const auto& o : obs) {
    const double mu =
        std::clamp(sigmoid(theta(0) + theta(1) * o.n + theta(2) * o.d), 1e-15, 1.0 - 1e-15);
    const double ystar = std::log(o.y) - std::log1p(-o.y);
    const double mustar = fit::digamma(mu * phi) - fit::digamma((1.0 - mu) * phi);
    const double common = phi * (ystar - mustar) * mu * (1.0 - mu);
    g(0) += common;
    g(1) += common * o.n;
    g(2) += common * o.d;
    g(3) += fit::digamma(phi) - mu * fit::digamma(mu * phi) -
            (1.0 - mu) * fit::digamma((1.0 - mu) * phi) + mu * std::log(o.y) +
            (1.0 - mu) * std::log1p(-o.y);
  }
  return g;
}

BetaRegModel fit_beta(std::vector<BetaObservation> obs) {
  const int n_pts = static_cast<int>(obs.size());
  if (n_pts < 20) throw FitError("fit_beta: needs at least 20 observations");
  double y_min = 1.0, y_max = 0.0;
  for (auto& o : obs) {
    if (!(o.y >= 0.0 && o.y <= 1.0) || !std::isfinite(o.y))
      throw FitError("fit_beta: response outside [0,1]");
    if (o.y <= 0.0 || o.y >= 1.0) o.y = (o.y * (n_pts - 1) + 0.5) / n_pts;
    y_min = std::min(y_min, o.y);
    y_max = std::max(y_max, o.y);
  }
  if (y_max - y_min < 1e-12) throw FitError("fit_beta: degenerate data (all responses equal)");

  // Initialise the mean submodel by least squares on the logit scale.
  Eigen::MatrixXd x(n_pts, 3);
  Eigen::VectorXd z(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = obs[i].n;
    x(i, 2) = obs[i].d;
    z(i) = std::log(obs[i].y) - std::log1p(-obs[i].y);
  }
  Eigen::Vector3d coef = x.colPivHouseholderQr().solve(z);

  double phi;
  {
    double var = 0.0, scale = 0.0;
    for (int i = 0; i < n_pts; ++i) {
      const double mu = sigmoid(coef(0) + coef(1) * obs[i].n + coef(2) * obs[i].d);
      var += (obs[i].y - mu) * (obs[i].y - mu);
      scale += mu * (1.0 - mu);
    }
    var /= n_pts;
    scale /= n_pts;
    phi = var > 1e-12 ? std::clamp(scale / var - 1.0, 1.0, 1e4) : 100.0;
  }

  // Fisher scoring on (alpha, beta_n, gamma_d, phi) with the expected
  // information matrix; steps are damped by the analytic gradient norm, which
  // stays precise even when the likelihood values themselves get noisy at
  // very large phi (nearly noise-free data drives phi towards infinity).
  Eigen::Vector4d theta(coef(0), coef(1), coef(2), phi);
  const auto expected_information = [&](const Eigen::Vector4d& t) {
    Eigen::Matrix4d info = Eigen::Matrix4d::Zero();
    const double p = t(3);
    for (const auto& o : obs) {
      const double mu =
          std::clamp(sigmoid(t(0) + t(1) * o.n + t(2) * o.d), 1e-15, 1.0 - 1e-15);
      const double w = mu * (1.0 - mu);
      const double tg_mu = fit::trigamma(mu * p);
      const double tg_nu = fit::trigamma((1.0 - mu) * p);
      const Eigen::Vector3d x(1.0, o.n, o.d);
      const double a = p * p * (tg_mu + tg_nu) * w * w;
      const double b = p * (tg_mu * mu - tg_nu * (1.0 - mu)) * w;
      const double c = mu * mu * tg_mu + (1.0 - mu) * (1.0 - mu) * tg_nu - fit::trigamma(p);
      info.topLeftCorner<3, 3>() += a * x * x.transpose();
      info.topRightCorner<3, 1>() += b * x;
      info(3, 3) += c;
    }
    info.bottomLeftCorner<1, 3>() = info.topRightCorner<3, 1>().transpose();
    return info;
  };

  for (int round = 0; round < 500; ++round) {
    Eigen::Vector4d g = beta_log_likelihood_gradient(obs, theta);
    if (g.norm() < 1e-6) {
      BetaRegModel model;
      model.alpha = theta(0);
      model.beta_n = theta(1);
      model.gamma_d = theta(2);
      model.phi = theta(3);
      model.n_obs = n_pts;
      return model;
    }

    // Re-centre the mean submodel at the current precision. The scoring step
    // converges quadratically, with gradient-norm damping as the safeguard.
    for (int inner = 0; inner < 50; ++inner) {
      Eigen::Vector3d gc = g.head(3);
      if (gc.norm() < 0.3e-6) break;
      const Eigen::Matrix4d info = expected_information(theta);
      Eigen::Vector3d step = info.topLeftCorner<3, 3>().ldlt().solve(gc);
      if (!step.allFinite()) step = gc / std::max(1.0, gc.norm());
      bool accepted = false;
      for (int halving = 0; halving < 40; ++halving) {
        Eigen::Vector4d trial = theta;
        trial.head(3) += step;
        const Eigen::Vector4d g_trial = beta_log_likelihood_gradient(obs, trial);
        if (g_trial.allFinite() && g_trial.head(3).norm() < gc.norm()) {
          theta = trial;
          g = g_trial;
          accepted = true;
          break;
        }
        step /= 2.0;
      }
      if (!accepted) break;
    }

    // One safeguarded Newton step on the precision parameter. On data with
    // (near-)exact mean responses the likelihood is unbounded in phi and the
    // step keeps doubling it until the phi score is negligible.
    g = beta_log_likelihood_gradient(obs, theta);
    if (std::abs(g(3)) >= 0.3e-6) {
      double h = 0.0;
      for (const auto& o : obs) {
        const double mu = std::clamp(
            sigmoid(theta(0) + theta(1) * o.n + theta(2) * o.d), 1e-15, 1.0 - 1e-15);
        h += fit::trigamma(theta(3)) - mu * mu * fit::trigamma(mu * theta(3)) -
             (1.0 - mu) * (1.0 - mu) * fit::trigamma((1.0 - mu) * theta(3));
      }
      double delta = h < 0.0 ? -g(3) / h : (g(3) > 0.0 ? theta(3) : -theta(3) / 2.0);
      delta = std::clamp(delta, -0.8 * theta(3), 4.0 * theta(3));
      for (int halving = 0; halving < 40; ++halving) {
        Eigen::Vector4d trial = theta;
        trial(3) = std::max(theta(3) + delta, 1e-8);
        const Eigen::Vector4d g_trial = beta_log_likelihood_gradient(obs, trial);
        if (g_trial.allFinite() && std::abs(g_trial(3)) < std::abs(g(3))) {
          theta = trial;
          break;
        }
        delta /= 2.0;
      }
    }
  }
  throw FitError("fit_beta: no convergence after 500 iterations");
}

// ---------------------------------------------------------------------------
// Power law

double PowerLawModel::predict(double n, int d, ClampCounter* clamps) const {
  const auto it = layer_baselines.find(d);
  if (it == layer_baselines.end())
    throw UntrainedModelError("power law: layer count " + std::to_string(d) + " not trained");
  double base = 1.0 + alpha * (n - baseline_n);
  bool hit = false;
  if (base < 1e-9) {
    base = 1e-9;
    hit = true;
  }
  double y = it->second * std::pow(base, beta);
  if (clamps) ++clamps->total;
  if (y < 0.0 || y > 1.0 || hit) {
    if (clamps) ++clamps->clamped;
    y = std::clamp(y, 0.0, 1.0);
  }
  return y;
}

PowerLawModel fit_power_law(const std::vector<PowerLawObservation>& obs) {
  if (obs.size() < 4) throw FitError("fit_power_law: too few observations");
  double n_min = std::numeric_limits<double>::infinity();
  double n_max = -std::numeric_limits<double>::infinity();
  for (const auto& o : obs) {
    n_min = std::min(n_min, o.n);
    n_max = std::max(n_max, o.n);
  }
  if (!(n_max > n_min))
    throw FitError("fit_power_law: needs at least two distinct qubit counts");

  PowerLawModel model;
  model.baseline_n = n_min;
  model.n_obs = static_cast<int>(obs.size());
  {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& o : obs)
      if (o.n == n_min) {
        acc[o.d].first += o.y;
        acc[o.d].second += 1;
      }
    std::set<int> layers;
    for (const auto& o : obs) layers.insert(o.d);
    for (int d : layers) {
      const auto it = acc.find(d);
      if (it == acc.end())
        throw FitError("fit_power_law: no baseline data for layer " + std::to_string(d));
      model.layer_baselines[d] = it->second.first / it->second.second;
    }
  }

  const double span = n_max - n_min;
  const auto project = [span](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    out(0) = std::max(out(0), (1e-6 - 1.0) / span);  // keep 1 + alpha (n - b) > 0
    out(1) = std::clamp(out(1), -60.0, 60.0);
    return out;
  };
  const auto residuals = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double base = 1.0 + v(0) * (obs[i].n - n_min);
      r(i) = obs[i].y - model.layer_baselines.at(obs[i].d) * std::pow(base, v(1));
    }
    return r;
  };
  const auto jacobian = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd j(obs.size(), 2);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double ybar = model.layer_baselines.at(obs[i].d);
      const double dn = obs[i].n - n_min;
      const double base = 1.0 + v(0) * dn;
      const double powered = std::pow(base, v(1));
      j(i, 0) = -ybar * v(1) * std::pow(base, v(1) - 1.0) * dn;
      j(i, 1) = -ybar * powered * std::log(base);
    }
    return j;
  };

  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  std::string diagnostics;
  for (double alpha0 : {0.01, 0.1, 0.5}) {
    for (double beta0 : {-2.0, -1.0, -0.5}) {
      const auto r = fit::levenberg_marquardt(residuals, jacobian,
                                              Eigen::Vector2d(alpha0, beta0), {}, project);
      if (std::isfinite(r.residual_sum) && r.residual_sum < best_cost) {
        best_cost = r.residual_sum;
        model.alpha = r.params(0);
        model.beta = r.params(1);
        found = true;
      } else if (!std::isfinite(r.residual_sum)) {
        diagnostics += " start(" + std::to_string(alpha0) + "," + std::to_string(beta0) +
                       ") diverged;";
      }
    }
  }
  if (!found)
    throw FitError("fit_power_law: non-linear least squares diverged;" + diagnostics);
  model.residual_sum = best_cost;
  return model;
}

// ---------------------------------------------------------------------------
// Degradation model

double DegradationModel::predict(double f_ideal, double lb, double n, int d_cx, int n_cx,
                                 double l, ClampCounter* clamps) const {
  double base_depth = 1.0 - l * beta_depth;
  double base_count = 1.0 - l * gamma_count;
  bool hit = false;
  if (base_depth < 0.0) {
    base_depth = 0.0;
    hit = true;
  }
  if (base_count < 0.0) {
    base_count = 0.0;
    hit = true;
  }
  double f = lb + (f_ideal - lb) * std::pow(base_depth, n * d_cx) *
                      std::pow(base_count, static_cast<double>(n_cx));
  const double lo = std::min(lb, f_ideal);
  const double hi = std::max(lb, f_ideal);
  if (clamps) ++clamps->total;
  if (hit || f < lo || f > hi) {
    if (clamps) ++clamps->clamped;
    f = std::clamp(f, lo, hi);
  }
  return f;
}

DegradationModel fit_degradation(const std::vector<DegradationObservation>& obs) {
  if (obs.size() < 4) throw FitError("fit_degradation: too few observations");
  double l_max = 0.0;
  for (const auto& o : obs) {
    if (!(o.l > 0.0)) throw FitError("fit_degradation: noise level must be positive");
    l_max = std::max(l_max, o.l);
  }
  const double box_hi = (1.0 - 1e-9) / l_max;
  const auto project = [box_hi](const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    out(0) = std::clamp(out(0), 0.0, box_hi);
    out(1) = std::clamp(out(1), 0.0, box_hi);
    return out;
  };
  const auto residuals = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto& o = obs[i];
      const double f = o.lb + (o.f_ideal - o.lb) * std::pow(1.0 - o.l * v(0), o.n * o.d_cx) *
                                  std::pow(1.0 - o.l * v(1), o.n_cx);
      r(i) = o.f_noisy - f;
    }
    return r;
  };
  const auto jacobian = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd j(obs.size(), 2);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto& o = obs[i];
      const double b1 = 1.0 - o.l * v(0);
      const double b2 = 1.0 - o.l * v(1);
      const double e1 = o.n * o.d_cx;
      const double e2 = o.n_cx;
      const double amp = o.f_ideal - o.lb;
      j(i, 0) = amp * e1 * o.l * std::pow(b1, e1 - 1.0) * std::pow(b2, e2);
      j(i, 1) = amp * e2 * o.l * std::pow(b1, e1) * std::pow(b2, e2 - 1.0);
    }
    return j;
  };

  DegradationModel model;
  model.n_obs = static_cast<int>(obs.size());
  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double b0 : {0.0, 1e-4, 1e-3, 1e-2}) {
    for (double g0 : {0.0, 1e-4, 1e-3, 1e-2}) {
      const auto r = fit::levenberg_marquardt(residuals, jacobian, Eigen::Vector2d(b0, g0),
                                              {}, project);
      if (std::isfinite(r.residual_sum) && r.residual_sum < best_cost) {
        best_cost = r.residual_sum;
        model.beta_depth = r.params(0);
        model.gamma_count = r.params(1);
        found = true;
      }
    }
  }
  if (!found) throw FitError("fit_degradation: non-linear least squares diverged");
  if (model.beta_depth > box_hi - 1e-9 || model.gamma_count > box_hi - 1e-9)
    throw FitError("fit_degradation: optimum pinned at the base-positivity constraint");
  model.residual_sum = best_cost;
  return model;
}

// ---------------------------------------------------------------------------
// Runtime model

double RuntimeModel::predict(double d_cx) const {
  return std::exp(log_alpha) * std::pow(d_cx, beta);
}

RuntimeModel fit_runtime(const std::vector<std::pair<double, double>>& depth_time) {
  if (depth_time.size() < 2) throw FitError("fit_runtime: too few observations");
  double first_depth = depth_time.front().first;
  bool distinct = false;
  for (const auto& [d, t] : depth_time) {
    if (!(d > 0.0) || !(t > 0.0))
      throw FitError("fit_runtime: depths and runtimes must be positive");
    if (d != first_depth) distinct = true;
  }
  if (!distinct) throw FitError("fit_runtime: rank deficiency (single distinct depth)");

  const int n = static_cast<int>(depth_time.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [d, t] : depth_time) {
    const double lx = std::log(d), ly = std::log(t);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  RuntimeModel model;
  model.beta = (n * sxy - sx * sy) / denom;
  model.log_alpha = (sy - model.beta * sx) / n;
  model.n_obs = n;

  const double mean_y = sy / n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [d, t] : depth_time) {
    const double ly = std::log(t);
    const double pred = model.log_alpha + model.beta * std::log(d);
    ss_res += (ly - pred) * (ly - pred);
    ss_tot += (ly - mean_y) * (ly - mean_y);
  }
  model.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return model;
}

// ---------------------------------------------------------------------------
// Bundles

double LevelModels::predict_y(double n, int d, ClampCounter* clamps) const {
  if (chosen == QualityModelKind::Beta) {
    if (!beta) throw UntrainedModelError("bundle: beta model not trained");
    return beta->predict(n, d);
  }
  if (!power) throw UntrainedModelError("bundle: power-law model not trained");
  return power->predict(n, d, clamps);
}

const LevelModels* ModelBundle::find_level(double l) const {
  for (const auto& [key, value] : levels)
    if (std::abs(key - l) < 1e-9) return &value;
  return nullptr;
}

double ModelBundle::predict_quality(const InstanceFeatures& features, double l,
                                    ClampCounter* clamps) const {
  const LevelModels* ideal = find_level(0.0);
  if (!ideal) throw UntrainedModelError("bundle: no ideal-level models");
  const double y_ideal = ideal->predict_y(features.n, features.d, clamps);
  const double f_ideal = features.lb + y_ideal * (features.ub - features.lb);
  double f = f_ideal;
  if (l > 0.0) {
    if (!degradation) throw UntrainedModelError("bundle: degradation model not trained");
    f = degradation->predict(f_ideal, features.lb, features.n, features.d_cx, features.n_cx,
                             l, clamps);
  }
  return std::clamp(f, features.lb, features.ub);
}

double ModelBundle::predict_runtime(double d_cx, double l) const {
  const LevelModels* level = find_level(l);
  if (!level || !level->runtime)
    throw UntrainedModelError("bundle: runtime model not trained for this level");
  return level->runtime->predict(d_cx);
}

EvalEntry evaluate_direct(const ModelBundle& bundle, QualityModelKind kind,
                          const std::vector<Observation>& obs, double level,
                          ClampCounter* clamps) {
  const LevelModels* models = bundle.find_level(level);
  if (!models) throw UntrainedModelError("evaluate: level not trained");
  RunningStats stats;
  for (const auto& o : obs) {
    double pred;
    if (kind == QualityModelKind::Beta) {
      if (!models->beta) throw UntrainedModelError("evaluate: beta model not trained");
      pred = models->beta->predict(o.n, o.d);
    } else {
      if (!models->power) throw UntrainedModelError("evaluate: power-law model not trained");
      pred = models->power->predict(o.n, o.d, clamps);
    }
    stats.add(o.y - pred);
  }
  const auto entry = stats.finish();
  if (entry.count == 0) throw FitError("evaluate: empty test set");
  return entry;
}

EvalEntry evaluate_degradation_path(
    const ModelBundle& bundle, const std::vector<Observation>& obs,
    const std::map<std::pair<std::string, int>, double>* measured_ideal,
    ClampCounter* clamps) {
  if (!bundle.degradation) throw UntrainedModelError("evaluate: degradation model not trained");
  RunningStats stats;
  for (const auto& o : obs) {
    double f_ideal;
    if (measured_ideal) {
      const auto it = measured_ideal->find({o.instance_id, o.d});
      if (it == measured_ideal->end()) continue;
      f_ideal = it->second;
    } else {
      const LevelModels* ideal = bundle.find_level(0.0);
      if (!ideal) throw UntrainedModelError("evaluate: no ideal-level models");
      f_ideal = o.lb + ideal->predict_y(o.n, o.d, clamps) * (o.ub - o.lb);
    }
    const double f_pred =
        bundle.degradation->predict(f_ideal, o.lb, o.n, o.d_cx, o.n_cx, o.l, clamps);
    const double y_pred = (f_pred - o.lb) / (o.ub - o.lb);
    stats.add(o.y - y_pred);
  }
  const auto entry = stats.finish();
  if (entry.count == 0) throw FitError("evaluate: no degradation-path test points");
  return entry;
}

LevelModels fit_level_models(const std::vector<Observation>& train) {
  LevelModels out;
  out.train_records = static_cast<int>(train.size());
  std::vector<BetaObservation> beta_obs;
  std::vector<PowerLawObservation> power_obs;
  beta_obs.reserve(train.size());
  power_obs.reserve(train.size());
  for (const auto& o : train) {
    const double y = std::clamp(o.y, 0.0, 1.0);
    beta_obs.push_back({y, o.n, static_cast<double>(o.d)});
    power_obs.push_back({y, o.n, o.d});
  }
  out.beta = fit_beta(std::move(beta_obs));
  out.power = fit_power_law(power_obs);
  return out;
}

// ---------------------------------------------------------------------------
// Learning curve

std::vector<LearningCurvePoint> learning_curve(const std::vector<ScopeData>& scopes,
                                               const std::vector<double>& fractions,
                                               std::uint64_t seed) {
  if (fractions.size() < 2) throw FitError("learning_curve: needs at least two fractions");
  if (scopes.empty()) throw FitError("learning_curve: no scopes");

  struct ScopeState {
    std::vector<std::string> ranked_ids;
    double full_rmse = 0.0;
  };

  const auto best_of_two = [](const LevelModels& models, const std::vector<Observation>& test) {
    const double beta = model_rmse(models, QualityModelKind::Beta, test, nullptr);
    const double power = model_rmse(models, QualityModelKind::Power, test, nullptr);
    return std::min(beta, power);
  };

  std::vector<ScopeState> states(scopes.size());
  for (std::size_t s = 0; s < scopes.size(); ++s) {
    std::set<std::string> ids;
    for (const auto& o : scopes[s].train) ids.insert(o.instance_id);
    states[s].ranked_ids.assign(ids.begin(), ids.end());
    std::sort(states[s].ranked_ids.begin(), states[s].ranked_ids.end(),
              [&](const std::string& a, const std::string& b) {
                return mix64(fnv1a64(a), seed) < mix64(fnv1a64(b), seed);
              });
    const auto full = fit_level_models(scopes[s].train);
    states[s].full_rmse = best_of_two(full, scopes[s].extrapolation);
  }

  std::vector<LearningCurvePoint> curve;
  for (double fraction : fractions) {
    if (!(fraction > 0.0 && fraction <= 1.0))
      throw FitError("learning_curve: fractions must lie in (0, 1]");
    LearningCurvePoint point;
    point.fraction = fraction;
    double ratio_sum = 0.0;
    for (std::size_t s = 0; s < scopes.size(); ++s) {
      const auto& ranked = states[s].ranked_ids;
      const std::size_t keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(fraction * ranked.size())));
      std::set<std::string> selected(ranked.begin(), ranked.begin() + std::min(keep, ranked.size()));
      std::vector<Observation> sub;
      for (const auto& o : scopes[s].train)
        if (selected.count(o.instance_id)) sub.push_back(o);
      if (sub.size() < 20)
        throw FitError("learning_curve: fraction too small to fit scope " + scopes[s].name);
      const auto models = fit_level_models(sub);
      const double rmse = best_of_two(models, scopes[s].extrapolation);
      const double ratio = states[s].full_rmse > 0.0 ? rmse / states[s].full_rmse : 1.0;
      point.scope_ratios[scopes[s].name] = ratio;
      ratio_sum += ratio;
      point.n_instances += static_cast<int>(selected.size());
      point.n_records += static_cast<int>(sub.size());
    }
    point.mean_ratio = ratio_sum / scopes.size();
    curve.push_back(std::move(point));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

nlohmann::ordered_json level_to_json(double level, const LevelModels& m) {
  nlohmann::ordered_json j;
  j["level"] = level;
  j["chosen"] = std::string(to_string(m.chosen));
  j["train_records"] = m.train_records;
  if (m.beta) {
    j["beta"] = {{"alpha", m.beta->alpha},
                 {"beta_n", m.beta->beta_n},
                 {"gamma_d", m.beta->gamma_d},
                 {"phi", m.beta->phi},
                 {"n_obs", m.beta->n_obs}};
  }
  if (m.power) {
    nlohmann::ordered_json baselines;
    for (const auto& [d, y] : m.power->layer_baselines) baselines[std::to_string(d)] = y;
    j["power"] = {{"baseline_n", m.power->baseline_n},
                  {"alpha", m.power->alpha},
                  {"beta", m.power->beta},
                  {"residual_sum", m.power->residual_sum},
                  {"n_obs", m.power->n_obs},
                  {"layer_baselines", baselines}};
  }
  if (m.runtime) {
    j["runtime"] = {{"log_alpha", m.runtime->log_alpha},
                    {"beta", m.runtime->beta},
                    {"r_squared", m.runtime->r_squared},
                    {"n_obs", m.runtime->n_obs}};
  }
  j["rmse"] = m.rmse;
  return j;
}

LevelModels level_from_json(const nlohmann::json& j) {
  LevelModels m;
  m.chosen = j.at("chosen").get<std::string>() == "power" ? QualityModelKind::Power
                                                          : QualityModelKind::Beta;
  m.train_records = j.at("train_records").get<int>();
  if (j.contains("beta")) {
    BetaRegModel b;
    b.alpha = j["beta"].at("alpha").get<double>();
    b.beta_n = j["beta"].at("beta_n").get<double>();
    b.gamma_d = j["beta"].at("gamma_d").get<double>();
    b.phi = j["beta"].at("phi").get<double>();
    b.n_obs = j["beta"].at("n_obs").get<int>();
    m.beta = b;
  }
  if (j.contains("power")) {
    PowerLawModel p;
    p.baseline_n = j["power"].at("baseline_n").get<double>();
    p.alpha = j["power"].at("alpha").get<double>();
    p.beta = j["power"].at("beta").get<double>();
    p.residual_sum = j["power"].at("residual_sum").get<double>();
    p.n_obs = j["power"].at("n_obs").get<int>();
    for (const auto& [key, value] : j["power"].at("layer_baselines").items())
      p.layer_baselines[std::stoi(key)] = value.get<double>();
    m.power = p;
  }
  if (j.contains("runtime")) {
    RuntimeModel r;
    r.log_alpha = j["runtime"].at("log_alpha").get<double>();
    r.beta = j["runtime"].at("beta").get<double>();
    r.r_squared = j["runtime"].at("r_squared").get<double>();
    r.n_obs = j["runtime"].at("n_obs").get<int>();
    m.runtime = r;
  }
  if (j.contains("rmse")) m.rmse = j.at("rmse").get<std::map<std::string, double>>();
  return m;
}

}  // namespace

nlohmann::ordered_json bundle_to_json(const ModelBundle& bundle) {
  nlohmann::ordered_json j;
  auto levels = nlohmann::ordered_json::array();
  for (const auto& [level, models] : bundle.levels) levels.push_back(level_to_json(level, models));
  j["levels"] = std::move(levels);
  if (bundle.degradation) {
    j["degradation"] = {{"beta_depth", bundle.degradation->beta_depth},
                        {"gamma_count", bundle.degradation->gamma_count},
                        {"residual_sum", bundle.degradation->residual_sum},
                        {"n_obs", bundle.degradation->n_obs}};
    j["degradation_mode"] = bundle.degradation_mode;
  }
  return j;
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  ModelBundle bundle;
  for (const auto& lj : j.at("levels"))
    bundle.levels[lj.at("level").get<double>()] = level_from_json(lj);
  if (j.contains("degradation") && !j["degradation"].is_null()) {
    DegradationModel d;
    d.beta_depth = j["degradation"].at("beta_depth").get<double>();
    d.gamma_count = j["degradation"].at("gamma_count").get<double>();
    d.residual_sum = j["degradation"].at("residual_sum").get<double>();
    d.n_obs = j["degradation"].at("n_obs").get<int>();
    bundle.degradation = d;
    bundle.degradation_mode = j.value("degradation_mode", "measured_ideal");
  }
  return bundle;
}

}  // namespace qdaw::models
