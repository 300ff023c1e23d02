#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qdaw::models {

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UntrainedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Counts range-clamping events during prediction; the clamped share should
/// stay small on healthy test suites.
struct ClampCounter {
  long clamped = 0;
  long total = 0;
};

// ---------------------------------------------------------------------------
// Beta regression: Y ~ Beta(mu * phi, (1 - mu) * phi) with
// logit(mu) = alpha + beta_n * n + gamma_d * d.

struct BetaObservation {
  double y = 0.0;
  double n = 0.0;
  double d = 0.0;
};

struct BetaRegModel {
  double alpha = 0.0;
  double beta_n = 0.0;
  double gamma_d = 0.0;
  double phi = 1.0;
  int n_obs = 0;

  double predict(double n, double d) const;
};

/// Log-likelihood of theta = (alpha, beta_n, gamma_d, phi) and its analytic
/// gradient; exposed so the gradient can be checked against finite
/// differences. Observations must have y strictly inside (0, 1).
double beta_log_likelihood(const std::vector<BetaObservation>& obs, const Eigen::Vector4d& theta);
Eigen::Vector4d beta_log_likelihood_gradient(const std::vector<BetaObservation>& obs,
                                             const Eigen::Vector4d& theta);

/// Maximum-likelihood fit. Values at the interval endpoints are compressed
/// via y' = (y (N - 1) + 0.5) / N before fitting. Throws FitError on
/// degenerate data or non-convergence (gradient norm >= 1e-6 after 500
/// rounds).
BetaRegModel fit_beta(std::vector<BetaObservation> obs);

// ---------------------------------------------------------------------------
// Power law: Y ~ ybar_d(b) * (1 + alpha (n - b))^beta, with per-layer
// baselines at the smallest training qubit count b and (alpha, beta) shared
// across layers.

struct PowerLawObservation {
  double y = 0.0;
  double n = 0.0;
  int d = 1;
};

struct PowerLawModel {
  double baseline_n = 0.0;
  std::map<int, double> layer_baselines;
  double alpha = 0.0;
  double beta = 0.0;
  double residual_sum = 0.0;
  int n_obs = 0;

  /// Prediction clamped to [0, 1]; the power-law base is floored at a tiny
  /// positive value outside the fitted domain.
  double predict(double n, int d, ClampCounter* clamps = nullptr) const;
};

PowerLawModel fit_power_law(const std::vector<PowerLawObservation>& obs);

// ---------------------------------------------------------------------------
// Quality degradation: f_noisy ~ LB + (f_ideal - LB) (1 - l beta)^(n d_cx)
// * (1 - l gamma)^(n_cx).

struct DegradationObservation {
  double f_noisy = 0.0;
  double f_ideal = 0.0;
  double lb = 0.0;
  double n = 0.0;
  int d_cx = 0;
  int n_cx = 0;
  double l = 0.0;
};

struct DegradationModel {
  double beta_depth = 0.0;
  double gamma_count = 0.0;
  double residual_sum = 0.0;
  int n_obs = 0;

  /// At l = 0 this returns f_ideal exactly; otherwise the result lies between
  /// LB and f_ideal (bases are floored at zero outside the fitted range).
  double predict(double f_ideal, double lb, double n, int d_cx, int n_cx, double l,
                 ClampCounter* clamps = nullptr) const;
};

/// Non-linear least squares with the box constraint that both bases stay in
/// (0, 1] over the fitted noise range; a fit pinned at the constraint
/// boundary is an error.
DegradationModel fit_degradation(const std::vector<DegradationObservation>& obs);

// ---------------------------------------------------------------------------
// Runtime: T ~ alpha * d_cx^beta, ordinary least squares after log transform.

struct RuntimeModel {
  double log_alpha = 0.0;
  double beta = 0.0;
  double r_squared = 0.0;
  int n_obs = 0;

  double predict(double d_cx) const;
};

/// Each pair is (d_cx, seconds); both must be positive and at least two
/// distinct depths are required.
RuntimeModel fit_runtime(const std::vector<std::pair<double, double>>& depth_time);

// ---------------------------------------------------------------------------
// Bundles and evaluation.

/// One benchmark data point as consumed by the models module.
struct Observation {
  std::string instance_id;
  double y = 0.0;  // normalised quality, Eq-style (f - lb) / (ub - lb)
  double f = 0.0;
  double lb = 0.0, ub = 0.0;
  double n = 0.0;
  int d = 1;  // layers
  int d_cx = 0, n_cx = 0;
  double l = 0.0;
  double runtime = 0.0;
};

enum class QualityModelKind { Beta, Power };
std::string_view to_string(QualityModelKind kind);

/// Direct models fitted on one (algorithm, problem, level) scope.
struct LevelModels {
  std::optional<BetaRegModel> beta;
  std::optional<PowerLawModel> power;
  std::optional<RuntimeModel> runtime;
  QualityModelKind chosen = QualityModelKind::Beta;
  std::map<std::string, double> rmse;  // "<model>_holdout" / "<model>_extrapolation"
  int train_records = 0;

  double predict_y(double n, int d, ClampCounter* clamps = nullptr) const;  // chosen model
};

struct InstanceFeatures {
  double n = 0.0;
  int d = 1;
  int d_cx = 0;
  int n_cx = 0;
  double lb = 0.0;
  double ub = 0.0;
};

/// All fitted models for one (algorithm, problem) pair: direct quality and
/// runtime models per noise level (0 = ideal) plus one degradation model
/// covering the noisy levels.
struct ModelBundle {
  std::map<double, LevelModels> levels;
  std::optional<DegradationModel> degradation;
  std::string degradation_mode;  // "measured_ideal" or "predicted_ideal"

  const LevelModels* find_level(double l) const;

  /// Ideal predictions denormalise the chosen level-0 model through the
  /// bounds; noisy predictions chain the ideal prediction through the
  /// degradation model. Result clamped to [lb, ub].
  double predict_quality(const InstanceFeatures& features, double l,
                         ClampCounter* clamps = nullptr) const;

  /// Runtime prediction from the runtime model trained at level l.
  double predict_runtime(double d_cx, double l) const;
};

struct EvalEntry {
  double rmse = 0.0;
  double mean_residual = 0.0;  // mean(y_true - y_pred); positive = underestimation
  int count = 0;
};

EvalEntry evaluate_direct(const ModelBundle& bundle, QualityModelKind kind,
                          const std::vector<Observation>& obs, double level,
                          ClampCounter* clamps = nullptr);

/// Degradation-path error on noisy observations: ideal quality is either
/// looked up in `measured_ideal` (keyed by (instance_id, layers)) or
/// predicted with the chosen ideal model when the pointer is null.
EvalEntry evaluate_degradation_path(
    const ModelBundle& bundle, const std::vector<Observation>& obs,
    const std::map<std::pair<std::string, int>, double>* measured_ideal = nullptr,
    ClampCounter* clamps = nullptr);

// ---------------------------------------------------------------------------
// Learning curve.

struct ScopeData {
  std::string name;
  std::vector<Observation> train;
  std::vector<Observation> extrapolation;
};

struct LearningCurvePoint {
  double fraction = 0.0;
  int n_instances = 0;
  int n_records = 0;
  double mean_ratio = 0.0;  // mean over scopes of rmse(fraction) / rmse(full)
  std::map<std::string, double> scope_ratios;
};

/// For each fraction, deterministically subsamples training instances per
/// scope, refits both quality models, and reports the best-of-two
/// extrapolation RMSE relative to the full-data fit.
std::vector<LearningCurvePoint> learning_curve(const std::vector<ScopeData>& scopes,
                                               const std::vector<double>& fractions,
                                               std::uint64_t seed);

/// Fits beta + power on one scope's training records (used by training and
/// the learning curve); y values are clamped into [0, 1] before fitting.
LevelModels fit_level_models(const std::vector<Observation>& train);

nlohmann::ordered_json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const nlohmann::json& j);

}  // namespace qdaw::models
