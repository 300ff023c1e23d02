#include "qdaw/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdaw/rng.hpp"

namespace qdaw::sim {

namespace {

struct Mat2 {
  Complex m[4];  // row-major
};

Mat2 gate_matrix_1q(const Gate& g) {
  if (g.kind == GateKind::RZ) {
    const Complex e0 = std::polar(1.0, -g.theta / 2.0);
    const Complex e1 = std::polar(1.0, g.theta / 2.0);
    return {{e0, 0.0, 0.0, e1}};
  }
  // sqrt(X)
  const Complex a{0.5, 0.5}, b{0.5, -0.5};
  return {{a, b, b, a}};
}

void apply_1q_statevector(StateVector& s, int q, const Mat2& u) {
  const std::size_t mask = std::size_t{1} << q;
  const std::size_t dim = s.dim();
  for (std::size_t block = 0; block < dim; block += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t i0 = block + k;
      const std::size_t i1 = i0 + mask;
      const Complex a0 = s.amps[i0], a1 = s.amps[i1];
      s.amps[i0] = u.m[0] * a0 + u.m[1] * a1;
      s.amps[i1] = u.m[2] * a0 + u.m[3] * a1;
    }
  }
}

void apply_cx_statevector(StateVector& s, int control, int target) {
  const std::size_t cm = std::size_t{1} << control;
  const std::size_t tm = std::size_t{1} << target;
  const std::size_t dim = s.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    if ((i & cm) && !(i & tm)) std::swap(s.amps[i], s.amps[i | tm]);
  }
}

// rho <- U rho (U acting on the row index of qubit q)
void rows_1q(DensityState& s, int q, const Mat2& u) {
  const std::size_t mask = std::size_t{1} << q;
  const std::size_t dim = s.dim();
  for (std::size_t block = 0; block < dim; block += mask << 1) {
    for (std::size_t k = 0; k < mask; ++k) {
      const std::size_t r0 = (block + k) * dim;
      const std::size_t r1 = r0 + mask * dim;
      for (std::size_t c = 0; c < dim; ++c) {
        const Complex a0 = s.rho[r0 + c], a1 = s.rho[r1 + c];
        s.rho[r0 + c] = u.m[0] * a0 + u.m[1] * a1;
        s.rho[r1 + c] = u.m[2] * a0 + u.m[3] * a1;
      }
    }
  }
}

// rho <- rho U^dag (U^dag acting on the column index of qubit q)
void cols_1q_dagger(DensityState& s, int q, const Mat2& u) {
  const std::size_t mask = std::size_t{1} << q;
  const std::size_t dim = s.dim();
  const Complex u00 = std::conj(u.m[0]), u01 = std::conj(u.m[1]);
  const Complex u10 = std::conj(u.m[2]), u11 = std::conj(u.m[3]);
  for (std::size_t r = 0; r < dim; ++r) {
    const std::size_t row = r * dim;
    for (std::size_t block = 0; block < dim; block += mask << 1) {
      for (std::size_t k = 0; k < mask; ++k) {
        const std::size_t c0 = row + block + k;
        const std::size_t c1 = c0 + mask;
        const Complex b0 = s.rho[c0], b1 = s.rho[c1];
        s.rho[c0] = b0 * u00 + b1 * u01;
        s.rho[c1] = b0 * u10 + b1 * u11;
      }
    }
  }
}

void cx_rows(DensityState& s, int control, int target) {
  const std::size_t cm = std::size_t{1} << control;
  const std::size_t tm = std::size_t{1} << target;
  const std::size_t dim = s.dim();
  for (std::size_t r = 0; r < dim; ++r) {
    if ((r & cm) && !(r & tm)) {
      const std::size_t a = r * dim, b = (r | tm) * dim;
      for (std::size_t c = 0; c < dim; ++c) std::swap(s.rho[a + c], s.rho[b + c]);
    }
  }
}

void cx_cols(DensityState& s, int control, int target) {
  const std::size_t cm = std::size_t{1} << control;
  const std::size_t tm = std::size_t{1} << target;
  const std::size_t dim = s.dim();
  for (std::size_t c = 0; c < dim; ++c) {
    if ((c & cm) && !(c & tm)) {
      for (std::size_t r = 0; r < dim; ++r)
        std::swap(s.rho[r * dim + c], s.rho[r * dim + (c | tm)]);
    }
  }
}

// Generic matrix application for the reference Kraus path: out += K rho K^dag
// with K a dense d x d operator on the subspace spanned by `qubits`.
void accumulate_kraus_term(const DensityState& in, DensityState& out,
                           const std::vector<Complex>& k,
                           const std::vector<int>& qubits) {
  const std::size_t dim = in.dim();
  const std::size_t d = std::size_t{1} << qubits.size();
  std::vector<std::size_t> offsets(d, 0);
  for (std::size_t s = 0; s < d; ++s)
    for (std::size_t b = 0; b < qubits.size(); ++b)
      if (s & (std::size_t{1} << b)) offsets[s] |= std::size_t{1} << qubits[b];

  std::size_t outer_mask = 0;
  for (int q : qubits) outer_mask |= std::size_t{1} << q;

  std::vector<Complex> row_block(d), col_block(d);
  for (std::size_t rbase = 0; rbase < dim; ++rbase) {
    if (rbase & outer_mask) continue;
    for (std::size_t cbase = 0; cbase < dim; ++cbase) {
      if (cbase & outer_mask) continue;
      // block(i, j) = rho[rbase + off_i, cbase + off_j]
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          Complex acc{0.0, 0.0};
          for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
              acc += k[i * d + a] * in.rho[(rbase + offsets[a]) * dim + cbase + offsets[b]] *
                     std::conj(k[j * d + b]);
          out.rho[(rbase + offsets[i]) * dim + cbase + offsets[j]] += acc;
        }
      }
    }
  }
}

}  // namespace

StateVector StateVector::zero_state(int n_qubits) {
  StateVector s;
  s.n_qubits = n_qubits;
  s.amps.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  s.amps[0] = 1.0;
  return s;
}

double StateVector::norm() const {
  double acc = 0.0;
  for (const Complex& a : amps) acc += std::norm(a);
  return std::sqrt(acc);
}

DensityState DensityState::zero_state(int n_qubits) {
  DensityState s;
  s.n_qubits = n_qubits;
  s.rho.assign((std::size_t{1} << n_qubits) * (std::size_t{1} << n_qubits), Complex{0.0, 0.0});
  s.rho[0] = 1.0;
  return s;
}

double DensityState::trace_real() const {
  const std::size_t d = dim();
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) acc += rho[i * d + i].real();
  return acc;
}

double DensityState::purity() const {
  const std::size_t d = dim();
  double acc = 0.0;
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) acc += std::norm(rho[r * d + c]);
  return acc;  // tr(rho^2) for Hermitian rho
}

void apply_gate(StateVector& state, const Gate& gate) {
  if (gate.kind == GateKind::CX) {
    apply_cx_statevector(state, gate.q0, gate.q1);
  } else {
    apply_1q_statevector(state, gate.q0, gate_matrix_1q(gate));
  }
}

StateVector run_ideal(const Circuit& circuit) {
  circuit.validate();
  if (circuit.n_qubits > 24) throw std::invalid_argument("run_ideal: n_qubits > 24");
  StateVector state = StateVector::zero_state(circuit.n_qubits);
  for (const auto& g : circuit.ops) apply_gate(state, g);
  if (std::abs(state.norm() - 1.0) > 1e-10)
    throw std::runtime_error("run_ideal: norm drifted beyond 1e-10");
  return state;
}

void apply_unitary_gate(DensityState& state, const Gate& gate) {
  if (gate.kind == GateKind::CX) {
    cx_rows(state, gate.q0, gate.q1);
    cx_cols(state, gate.q0, gate.q1);
  } else {
    const Mat2 u = gate_matrix_1q(gate);
    rows_1q(state, gate.q0, u);
    cols_1q_dagger(state, gate.q0, u);
  }
}

void apply_relaxation(DensityState& state, int q, const RelaxationRates& rates) {
  if (rates.gamma == 0.0 && rates.lambda == 0.0) return;
  const double keep = std::sqrt((1.0 - rates.gamma) * (1.0 - rates.lambda));
  const std::size_t mask = std::size_t{1} << q;
  const std::size_t dim = state.dim();
  for (std::size_t rb = 0; rb < dim; rb += mask << 1) {
    for (std::size_t rk = 0; rk < mask; ++rk) {
      const std::size_t r0 = rb + rk;
      const std::size_t r1 = r0 + mask;
      for (std::size_t cb = 0; cb < dim; cb += mask << 1) {
        for (std::size_t ck = 0; ck < mask; ++ck) {
          const std::size_t c0 = cb + ck;
          const std::size_t c1 = c0 + mask;
          Complex& e00 = state.rho[r0 * dim + c0];
          Complex& e01 = state.rho[r0 * dim + c1];
          Complex& e10 = state.rho[r1 * dim + c0];
          Complex& e11 = state.rho[r1 * dim + c1];
          e00 += rates.gamma * e11;
          e11 *= 1.0 - rates.gamma;
          e01 *= keep;
          e10 *= keep;
        }
      }
    }
  }
}

void apply_depolarizing_1q(DensityState& state, int q, double p) {
  if (p == 0.0) return;
  const std::size_t mask = std::size_t{1} << q;
  const std::size_t dim = state.dim();
  for (std::size_t rb = 0; rb < dim; rb += mask << 1) {
    for (std::size_t rk = 0; rk < mask; ++rk) {
      const std::size_t r0 = rb + rk;
      const std::size_t r1 = r0 + mask;
      for (std::size_t cb = 0; cb < dim; cb += mask << 1) {
        for (std::size_t ck = 0; ck < mask; ++ck) {
          const std::size_t c0 = cb + ck;
          const std::size_t c1 = c0 + mask;
          Complex& e00 = state.rho[r0 * dim + c0];
          Complex& e01 = state.rho[r0 * dim + c1];
          Complex& e10 = state.rho[r1 * dim + c0];
          Complex& e11 = state.rho[r1 * dim + c1];
          const Complex t = 0.5 * (e00 + e11);
          e00 = (1.0 - p) * e00 + p * t;
          e11 = (1.0 - p) * e11 + p * t;
          e01 *= 1.0 - p;
          e10 *= 1.0 - p;
        }
      }
    }
  }
}

void apply_depolarizing_2q(DensityState& state, int qa, int qb, double p) {
  if (p == 0.0) return;
  const std::size_t ma = std::size_t{1} << qa;
  const std::size_t mb = std::size_t{1} << qb;
  const std::size_t outer = ma | mb;
  const std::size_t dim = state.dim();
  const std::size_t offs[4] = {0, ma, mb, ma | mb};
  for (std::size_t r = 0; r < dim; ++r) {
    if (r & outer) continue;
    for (std::size_t c = 0; c < dim; ++c) {
      if (c & outer) continue;
      Complex t{0.0, 0.0};
      for (const std::size_t s : offs) t += state.rho[(r + s) * dim + c + s];
      t *= 0.25;
      for (const std::size_t sr : offs) {
        for (const std::size_t sc : offs) {
          Complex& e = state.rho[(r + sr) * dim + c + sc];
          e = sr == sc ? (1.0 - p) * e + p * t : (1.0 - p) * e;
        }
      }
    }
  }
}

void apply_kraus(DensityState& state, const KrausChannel& channel, int q0, int q1) {
  std::vector<int> qubits{q0};
  if (channel.arity == 2) {
    if (q1 < 0) throw std::invalid_argument("apply_kraus: two-qubit channel needs q1");
    qubits.push_back(q1);
  }
  DensityState out;
  out.n_qubits = state.n_qubits;
  out.rho.assign(state.rho.size(), Complex{0.0, 0.0});
  for (const auto& k : channel.kraus) accumulate_kraus_term(state, out, k, qubits);
  state.rho.swap(out.rho);
}

DensityState run_noisy(const Circuit& circuit, const NoiseParams& noise) {
  circuit.validate();
  noise.validate();
  if (circuit.n_qubits > 12) throw std::invalid_argument("run_noisy: n_qubits > 12");
  DensityState state = DensityState::zero_state(circuit.n_qubits);
  const double l = noise.level;
  const RelaxationRates rates_1q = relaxation_rates(l * noise.t_1q, noise.t1, noise.t2);
  const RelaxationRates rates_2q = relaxation_rates(l * noise.t_2q, noise.t1, noise.t2);
  for (const auto& g : circuit.ops) {
    apply_unitary_gate(state, g);
    if (l <= 0.0) continue;
    if (g.kind == GateKind::CX) {
      apply_relaxation(state, g.q0, rates_2q);
      apply_relaxation(state, g.q1, rates_2q);
      apply_depolarizing_2q(state, g.q0, g.q1, l * noise.p2);
    } else {
      apply_relaxation(state, g.q0, rates_1q);
      apply_depolarizing_1q(state, g.q0, l * noise.p1);
    }
  }
  if (circuit.measured && noise.relax_on_measure && l > 0.0) {
    const RelaxationRates rates_meas = relaxation_rates(l * noise.t_meas, noise.t1, noise.t2);
    for (int q = 0; q < circuit.n_qubits; ++q) apply_relaxation(state, q, rates_meas);
  }
  return state;
}

std::vector<double> born_probabilities(const StateVector& state) {
  std::vector<double> probs(state.dim());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::norm(state.amps[i]);
  return probs;
}

std::vector<double> born_probabilities(const DensityState& state) {
  const std::size_t d = state.dim();
  std::vector<double> probs(d);
  for (std::size_t i = 0; i < d; ++i) probs[i] = std::max(0.0, state.rho[i * d + i].real());
  return probs;
}

std::map<std::string, int> sample_from_probabilities(const std::vector<double>& probs,
                                                     int n_qubits, int shots,
                                                     std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("sample: shots must be >= 1");
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  if (acc <= 0.0) throw std::runtime_error("sample: zero total probability");
  Rng rng(mix64(seed, 0x5A5AULL));
  std::map<std::string, int> counts;
  std::vector<std::uint8_t> bits(n_qubits);
  for (int s = 0; s < shots; ++s) {
    const double u = rng.next_unit() * acc;
    const std::size_t idx = std::min<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), probs.size() - 1);
    for (int i = 0; i < n_qubits; ++i) bits[i] = static_cast<std::uint8_t>((idx >> i) & 1);
    ++counts[problems::bits_to_string(bits)];
  }
  return counts;
}

std::map<std::string, int> sample(const StateVector& state, int shots, std::uint64_t seed) {
  return sample_from_probabilities(born_probabilities(state), state.n_qubits, shots, seed);
}

std::map<std::string, int> sample(const DensityState& state, int shots, std::uint64_t seed) {
  return sample_from_probabilities(born_probabilities(state), state.n_qubits, shots, seed);
}

double expectation_from_probabilities(const std::vector<double>& probs,
                                      const problems::ProblemInstance& instance) {
  if (probs.size() != (std::size_t{1} << instance.n_qubits))
    throw std::invalid_argument("expectation: state dimension does not match instance");
  double acc = 0.0;
  std::vector<std::uint8_t> bits(instance.n_qubits);
  for (std::size_t idx = 0; idx < probs.size(); ++idx) {
    if (probs[idx] == 0.0) continue;
    for (int i = 0; i < instance.n_qubits; ++i)
      bits[i] = static_cast<std::uint8_t>((idx >> i) & 1);
    acc += probs[idx] * problems::solution_value(instance, bits);
  }
  return acc;
}

double expectation(const StateVector& state, const problems::ProblemInstance& instance) {
  return expectation_from_probabilities(born_probabilities(state), instance);
}

double expectation(const DensityState& state, const problems::ProblemInstance& instance) {
  return expectation_from_probabilities(born_probabilities(state), instance);
}

CircuitStats circuit_stats(const Circuit& circuit, const NoiseParams& noise) {
  circuit.validate();
  CircuitStats stats;
  std::vector<int> level(circuit.n_qubits, 0);
  std::vector<double> time(circuit.n_qubits, 0.0);
  const double t1q = noise.level * noise.t_1q;
  const double t2q = noise.level * noise.t_2q;
  for (const auto& g : circuit.ops) {
    if (g.kind == GateKind::CX) {
      ++stats.n_cx;
      const int depth = std::max(level[g.q0], level[g.q1]) + 1;
      level[g.q0] = level[g.q1] = depth;
      const double t = std::max(time[g.q0], time[g.q1]) + t2q;
      time[g.q0] = time[g.q1] = t;
    } else {
      time[g.q0] += t1q;
    }
  }
  for (int q = 0; q < circuit.n_qubits; ++q) {
    stats.d_cx = std::max(stats.d_cx, level[q]);
    stats.duration = std::max(stats.duration, time[q]);
  }
  stats.duration += noise.t_meas;
  return stats;
}

}  // namespace qdaw::sim
