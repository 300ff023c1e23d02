#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdaw/cobyla.hpp"
#include "qdaw/ising.hpp"
#include "qdaw/problems.hpp"
#include "qdaw/simulator.hpp"

namespace qdaw::algo {

enum class Variant { QAOA, WSQAOA, WSInitQAOA, RQAOA };

std::string_view to_string(Variant variant);
std::optional<Variant> variant_from_string(std::string_view name);

struct OptimizerSettings {
  double tolerance = 0.01;
  int max_iters = 150;
  double initial_step = 0.5;
};

struct AlgorithmSpec {
  Variant variant = Variant::QAOA;
  int layers = 1;
  int shots = 10000;
  OptimizerSettings optimizer;
  double ws_epsilon = 0.25;  // warm-start regularisation in [0, 0.5]
  int rqaoa_cutoff = 5;      // brute-force the remainder at this size

  void validate(bool noisy_backend) const;
};

/// Execution target: ideal statevector or noisy density-matrix simulation.
/// Runtime estimates for the ideal backend use baseline (level 1) gate
/// durations, since a noiseless device still takes physical time per gate.
struct Backend {
  std::optional<sim::NoiseParams> noise;

  bool ideal() const { return !noise.has_value(); }
  double level() const { return ideal() ? 0.0 : noise->level; }
  sim::NoiseParams timing() const { return noise ? *noise : sim::NoiseParams::baseline(1.0); }

  static Backend make_ideal() { return {}; }
  static Backend make_noisy(sim::NoiseParams params) { return {std::move(params)}; }
};

struct Outcome {
  Variant variant = Variant::QAOA;
  int layers = 1;
  double quality = 0.0;       // exact expectation of solution_value (f)
  double normalized_y = 0.0;  // (f - lb) / (ub - lb)
  double lb = 0.0, ub = 0.0;
  double quantum_seconds = 0.0;    // shots * circuit duration, summed over evaluations
  double classical_seconds = 0.0;  // measured wall time outside the simulator
  double runtime_seconds = 0.0;    // quantum_seconds + classical_seconds
  int d_cx = 0, n_cx = 0;          // first circuit of the run
  int optimizer_iters = 0;         // optimiser evaluations beyond initialisation
  std::string best_bits;
  double noise_level = 0.0;
  int shots = 0;
  std::uint64_t run_seed = 0;
};

enum class InitialState { Plus, WarmStart };
enum class MixerKind { Standard, WarmStart };

/// QAOA-family ansatz: the initial state is |+>^n or the product state
/// RY(theta_i)|0> with theta_i = 2 asin(sqrt(clamp(c_i, eps, 1-eps))); each
/// layer applies RZ(2 gamma h_i) and RZZ(2 gamma J_ij) for the cost, then
/// RX(2 beta) per qubit or the rotated warm-start mixer
/// RY(theta) RZ(-2 beta) RY(-theta). Output is transpiled to native gates.
sim::Circuit build_qaoa_circuit(const IsingModel& ising, std::span<const double> gammas,
                                std::span<const double> betas, InitialState initial,
                                MixerKind mixer, const std::vector<double>& c_star = {},
                                double epsilon = 0.25);

struct OptimizeResult {
  std::vector<double> params;
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Minimises a sampled objective with the derivative-free trust-region
/// optimiser; deterministic given the initial point.
OptimizeResult optimize_angles(const std::function<double(const std::vector<double>&)>& objective,
                               std::vector<double> initial, const OptimizerSettings& settings);

/// Runs one algorithm on one instance. The variational objective is the
/// sampled mean Ising energy at `shots` measurements per evaluation; the
/// reported quality is the exact expectation of the final state (RQAOA
/// reports the value of its reconstructed bitstring).
Outcome run_algorithm(const AlgorithmSpec& spec, const problems::ProblemInstance& instance,
                      const Backend& backend, std::uint64_t seed);

}  // namespace qdaw::algo
