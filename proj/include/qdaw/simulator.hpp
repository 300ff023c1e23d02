#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qdaw/circuit.hpp"
#include "qdaw/noise.hpp"
#include "qdaw/problems.hpp"

namespace qdaw::sim {

/// Pure state; amplitude index k encodes qubit i as bit i of k.
struct StateVector {
  int n_qubits = 0;
  std::vector<Complex> amps;

  static StateVector zero_state(int n_qubits);
  std::size_t dim() const { return amps.size(); }
  double norm() const;
};

/// Mixed state as a dense row-major 2^n x 2^n matrix.
struct DensityState {
  int n_qubits = 0;
  std::vector<Complex> rho;

  static DensityState zero_state(int n_qubits);
  std::size_t dim() const { return std::size_t{1} << n_qubits; }
  Complex& at(std::size_t r, std::size_t c) { return rho[r * dim() + c]; }
  const Complex& at(std::size_t r, std::size_t c) const { return rho[r * dim() + c]; }
  double trace_real() const;
  double purity() const;
};

/// |psi> = U |0...0>. n_qubits <= 24.
StateVector run_ideal(const Circuit& circuit);

/// Density-matrix simulation: after every gate, thermal relaxation for the
/// scaled gate duration followed by a depolarising channel is applied to the
/// gate's qubits; measurement applies relaxation for t_meas to all qubits.
/// Level 0 reproduces run_ideal. n_qubits <= 12.
DensityState run_noisy(const Circuit& circuit, const NoiseParams& noise);

std::vector<double> born_probabilities(const StateVector& state);
std::vector<double> born_probabilities(const DensityState& state);

/// Seeded multinomial draw; keys are little-endian bitstrings (char i = qubit i).
std::map<std::string, int> sample_from_probabilities(const std::vector<double>& probs,
                                                     int n_qubits, int shots,
                                                     std::uint64_t seed);
std::map<std::string, int> sample(const StateVector& state, int shots, std::uint64_t seed);
std::map<std::string, int> sample(const DensityState& state, int shots, std::uint64_t seed);

/// Exact expectation sum_x Pr[x] * solution_value(instance, x).
double expectation_from_probabilities(const std::vector<double>& probs,
                                      const problems::ProblemInstance& instance);
double expectation(const StateVector& state, const problems::ProblemInstance& instance);
double expectation(const DensityState& state, const problems::ProblemInstance& instance);

struct CircuitStats {
  int d_cx = 0;       // CX depth under qubit dependencies
  int n_cx = 0;       // CX count
  double duration = 0.0;  // critical-path time of one shot incl. measurement [s]
};
CircuitStats circuit_stats(const Circuit& circuit, const NoiseParams& noise);

// Low-level kernels, shared with tests.
void apply_gate(StateVector& state, const Gate& gate);
void apply_unitary_gate(DensityState& state, const Gate& gate);
void apply_relaxation(DensityState& state, int q, const RelaxationRates& rates);
void apply_depolarizing_1q(DensityState& state, int q, double p);
void apply_depolarizing_2q(DensityState& state, int qa, int qb, double p);

/// Reference Kraus application (sum K rho K^dag); slower than the dedicated
/// channel kernels above but valid for any channel. Two-qubit operators use
/// the convention that q0 is the low bit of the 4-dimensional index.
void apply_kraus(DensityState& state, const KrausChannel& channel, int q0, int q1 = -1);

}  // namespace qdaw::sim
