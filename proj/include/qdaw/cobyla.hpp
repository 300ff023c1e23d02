#pragma once

#include <functional>
#include <vector>

namespace qdaw::opt {

/// Options for the linear-approximation trust-region minimiser.
///
/// `tolerance` is an absolute convergence threshold on the objective change
/// per trust-region cycle (the improvement accumulated between two radius
/// shrinks); it is only tested once the radius has been shrunk twice, so a
/// slow start cannot trigger a premature stop. `max_iters` caps the number of
/// objective evaluations beyond the initial simplex.
struct Options {
  double tolerance = 0.01;
  int max_iters = 150;
  double initial_step = 0.5;
  double min_step = 1e-8;
};

struct Result {
  std::vector<double> x;
  double fx = 0.0;
  int iterations = 0;    // evaluations beyond the initial simplex
  int evaluations = 0;   // total evaluations including initialisation
  bool converged = false;
};

/// Derivative-free minimisation in the COBYLA style: a simplex of n+1 points
/// supports a linear interpolation model whose steepest-descent step of
/// length rho is evaluated each iteration (exactly one objective call); the
/// radius rho halves after a full round without improvement. Deterministic.
Result minimize(const std::function<double(const std::vector<double>&)>& objective,
                std::vector<double> x0, const Options& options);

}  // namespace qdaw::opt
