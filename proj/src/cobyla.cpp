#include "qdaw/cobyla.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qdaw::opt {

namespace {

struct Point {
  std::vector<double> x;
  double f = 0.0;
};

double distance2(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
  return acc;
}

}  // namespace

Result minimize(const std::function<double(const std::vector<double>&)>& objective,
                std::vector<double> x0, const Options& options) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw std::invalid_argument("minimize: empty parameter vector");
  if (options.max_iters < 0) throw std::invalid_argument("minimize: negative budget");

  Result result;
  std::vector<Point> points;
  points.reserve(n + 1);
  points.push_back({x0, objective(x0)});
  for (int k = 0; k < n; ++k) {
    std::vector<double> x = x0;
    x[k] += options.initial_step;
    points.push_back({x, objective(x)});
  }
  result.evaluations = n + 1;

  double rho = options.initial_step;
  const int fails_per_shrink = 8;  // dimension-independent refinement cadence
  int fail_streak = 0;
  int shrinks = 0;
  int small_cycles = 0;  // consecutive inter-shrink windows with gain < tolerance
  int probe_cursor = 0;

  auto best_index = [&]() {
    std::size_t best = 0;
    for (std::size_t k = 1; k < points.size(); ++k)
      if (points[k].f < points[best].f) best = k;
    return best;
  };
  double f_at_last_shrink = points[best_index()].f;

  while (result.iterations < options.max_iters) {
    const std::size_t bi = best_index();
    const Point& best = points[bi];

    // Linear interpolation model around the incumbent.
    Eigen::MatrixXd d(n, n);
    Eigen::VectorXd df(n);
    {
      int row = 0;
      for (std::size_t k = 0; k < points.size(); ++k) {
        if (k == bi) continue;
        for (int c = 0; c < n; ++c) d(row, c) = points[k].x[c] - best.x[c];
        df(row) = points[k].f - best.f;
        ++row;
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
    std::vector<double> candidate = best.x;
    double predicted_gain = 0.0;
    if (qr.rank() == n) {
      const Eigen::VectorXd g = qr.solve(df);
      const double gnorm = g.norm();
      if (std::isfinite(gnorm) && gnorm > 1e-14) {
        for (int c = 0; c < n; ++c) candidate[c] = best.x[c] - rho * g(c) / gnorm;
        predicted_gain = rho * gnorm;
      }
    }
    if (predicted_gain == 0.0) {
      // Degenerate geometry: probe along a coordinate axis to restore it.
      candidate[probe_cursor % n] += rho;
      ++probe_cursor;
    }

    const double f_best_before = best.f;
    const double fc = objective(candidate);
    ++result.iterations;
    ++result.evaluations;

    const double gain = f_best_before - fc;
    // Insert the sample: evict the worst point on improvement, otherwise the
    // point farthest from the incumbent (keeps the interpolation set local).
    if (gain > 0.0) {
      std::size_t worst = 0;
      for (std::size_t k = 1; k < points.size(); ++k)
        if (points[k].f > points[worst].f) worst = k;
      points[worst] = {candidate, fc};
      continue;
    }
    std::size_t farthest = bi == 0 ? 1 : 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (k == bi) continue;
      if (distance2(points[k].x, points[bi].x) > distance2(points[farthest].x, points[bi].x))
        farthest = k;
    }
    // The linear model needs samples at the current scale: points left over
    // from a wider radius are replaced even when the new sample is worse.
    const bool stale_geometry =
        distance2(points[farthest].x, points[bi].x) > 4.0 * rho * rho;
    if (stale_geometry || fc < points[farthest].f) points[farthest] = {candidate, fc};

    // Enough non-improving samples accumulated at this radius: refine it.
    // The counter resets only on a shrink (not on interleaved successes), so
    // the refinement cadence stays tight under a noisy objective.
    if (++fail_streak < fails_per_shrink) continue;
    fail_streak = 0;
    ++shrinks;
    const double f_now = points[best_index()].f;
    const double cycle_gain = f_at_last_shrink - f_now;
    f_at_last_shrink = f_now;
    small_cycles = cycle_gain < options.tolerance ? small_cycles + 1 : 0;
    rho /= 2.0;
    // The objective-change test only applies once the radius has genuinely
    // refined; earlier cycles explore rather than polish. Three consecutive
    // sub-tolerance windows are required so that sampling noise in the
    // objective does not end a run prematurely.
    const bool tolerance_stop = rho <= options.initial_step / 1024.0 && small_cycles >= 3;
    if (tolerance_stop || rho < options.min_step) {
      result.converged = true;
      break;
    }
  }

  const std::size_t bi = best_index();
  result.x = points[bi].x;
  result.fx = points[bi].f;
  return result;
}

}  // namespace qdaw::opt
