#include "qdaw/fitmath.hpp"

#include <cmath>
#include <stdexcept>

namespace qdaw::fit {

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: requires x > 0");
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // asymptotic expansion with Bernoulli coefficients
  return acc + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("trigamma: requires x > 0");
  double acc = 0.0;
  while (x < 6.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return acc + inv * (1.0 + 0.5 * inv +
                      inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0))));
}

BfgsResult bfgs(const std::function<double(const Eigen::VectorXd&)>& f,
                const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                Eigen::VectorXd x0, const BfgsOptions& options) {
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian estimate
  Eigen::VectorXd x = std::move(x0);
  double fx = f(x);
  Eigen::VectorXd g = grad(x);

  BfgsResult result;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    result.grad_norm = g.norm();
    if (result.grad_norm < options.grad_tol) break;

    Eigen::VectorXd direction = -h * g;
    if (direction.dot(g) >= 0.0) direction = -g;  // reset on non-descent

    double step = 1.0;
    const double slope = direction.dot(g);
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * direction;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::VectorXd hy = h * y;
      const double yhy = y.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
           (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    x = std::move(x_new);
    fx = f_new;
    g = std::move(g_new);
    result.iterations = iter + 1;
  }
  result.x = std::move(x);
  result.fx = fx;
  result.grad_norm = g.norm();
  return result;
}

LmResult levenberg_marquardt(const ResidualFn& residuals, const JacobianFn& jacobian,
                             Eigen::VectorXd x0, const LmOptions& options,
                             const ProjectFn& project) {
  Eigen::VectorXd x = project ? project(x0) : std::move(x0);
  Eigen::VectorXd r = residuals(x);
  double cost = r.squaredNorm();
  double lambda = options.initial_lambda;

  LmResult result;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const Eigen::MatrixXd j = jacobian(x);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;
    if (jtr.norm() < 1e-14) {
      result.converged = true;
      break;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal().array() += lambda * (jtj.diagonal().array().abs() + 1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      Eigen::VectorXd x_try = x + delta;
      if (project) x_try = project(x_try);
      const Eigen::VectorXd r_try = residuals(x_try);
      const double cost_try = r_try.squaredNorm();
      if (std::isfinite(cost_try) && cost_try < cost) {
        const double decrease = cost - cost_try;
        x = std::move(x_try);
        r = r_try;
        cost = cost_try;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        result.iterations = iter + 1;
        if (decrease < options.ftol * (1.0 + cost)) {
          result.converged = true;
          iter = options.max_iters;  // done
        }
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) {
      result.converged = true;  // no direction improves: local optimum
      break;
    }
  }
  result.params = std::move(x);
  result.residual_sum = cost;
  return result;
}

}  // namespace qdaw::fit
