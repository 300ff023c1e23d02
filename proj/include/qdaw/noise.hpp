#pragma once

#include <complex>
#include <vector>

namespace qdaw::sim {

/// Device noise model parameters. The level scalar scales both the
/// depolarising probabilities and the gate durations; level 0 is noiseless
/// and level 1 corresponds to the baseline hardware estimates below.
struct NoiseParams {
  double p1 = 0.0003;     // single-qubit depolarising probability
  double p2 = 0.01;       // two-qubit depolarising probability
  double t_1q = 35e-9;    // single-qubit gate time [s]
  double t_2q = 400e-9;   // two-qubit gate time [s]
  double t1 = 100e-6;     // energy relaxation time T1 [s]
  double t2 = 85e-6;      // dephasing time T2 [s], T2 <= 2*T1
  double t_meas = 4e-6;   // measurement time [s]
  double level = 1.0;
  bool relax_on_measure = true;  // apply relaxation for t_meas on measurement

  void validate() const;  // throws on inconsistent parameters

  static NoiseParams baseline(double level = 1.0) {
    NoiseParams p;
    p.level = level;
    return p;
  }
};

using Complex = std::complex<double>;

/// Quantum channel in Kraus form; operators are dense row-major matrices of
/// dimension 2^arity. Completeness (sum K^dag K = I) is verified to 1e-12 at
/// construction.
struct KrausChannel {
  int arity = 1;  // number of qubits acted on (1 or 2)
  std::vector<std::vector<Complex>> kraus;

  KrausChannel(int arity, std::vector<std::vector<Complex>> ops);
  std::size_t dim() const { return std::size_t{1} << arity; }
};

/// Replaces the qubit state with I/2 with probability p.
KrausChannel depolarizing_1q(double p);

/// Replaces the two-qubit state with I/4 with probability p.
KrausChannel depolarizing_2q(double p);

/// Combined amplitude damping (gamma) and phase damping (lambda) toward |0>.
KrausChannel thermal_relaxation(double gamma, double lambda);

/// Decay parameters for idling a qubit for `duration` seconds:
/// gamma = 1 - exp(-t/T1) and phase damping from T_phi with
/// 1/T2 = 1/(2 T1) + 1/T_phi.
struct RelaxationRates {
  double gamma = 0.0;
  double lambda = 0.0;
};
RelaxationRates relaxation_rates(double duration, double t1, double t2);

}  // namespace qdaw::sim
