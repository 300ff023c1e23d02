#pragma once

#include <Eigen/Dense>
#include <functional>

namespace qdaw::fit {

double digamma(double x);
double trigamma(double x);

struct BfgsOptions {
  int max_iters = 200;
  double grad_tol = 1e-9;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// BFGS minimisation with Armijo backtracking.
BfgsResult bfgs(const std::function<double(const Eigen::VectorXd&)>& f,
                const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                Eigen::VectorXd x0, const BfgsOptions& options = {});

struct LmOptions {
  int max_iters = 300;
  double ftol = 1e-15;
  double initial_lambda = 1e-3;
};

struct LmResult {
  Eigen::VectorXd params;
  double residual_sum = 0.0;  // sum of squared residuals
  bool converged = false;
  int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using ProjectFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Damped Gauss-Newton (Levenberg-Marquardt) least squares; trial steps are
/// passed through `project` (if given) before evaluation, which keeps box
/// constraints feasible.
LmResult levenberg_marquardt(const ResidualFn& residuals, const JacobianFn& jacobian,
                             Eigen::VectorXd x0, const LmOptions& options = {},
                             const ProjectFn& project = nullptr);

}  // namespace qdaw::fit
