#include "qdaw/qaoa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qdaw/rng.hpp"

namespace qdaw::algo {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kLowerBoundSamples = 2000;

using Clock = std::chrono::steady_clock;

struct SimClock {
  double seconds = 0.0;

  template <typename Fn>
  auto timed(Fn&& fn) {
    const auto start = Clock::now();
    auto value = fn();
    seconds += std::chrono::duration<double>(Clock::now() - start).count();
    return value;
  }
};

std::vector<double> simulate_probabilities(const sim::Circuit& circuit, const Backend& backend) {
  if (backend.ideal()) return sim::born_probabilities(sim::run_ideal(circuit));
  return sim::born_probabilities(sim::run_noisy(circuit, *backend.noise));
}

/// Mean of `values[idx]` over a seeded multinomial draw from `probs`.
double sampled_mean(const std::vector<double>& probs, const std::vector<double>& values,
                    int shots, std::uint64_t seed) {
  std::vector<double> cdf(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    total += probs[i];
    cdf[i] = total;
  }
  Rng rng(mix64(seed, 0x5A5AULL));
  double acc = 0.0;
  for (int s = 0; s < shots; ++s) {
    const double u = rng.next_unit() * total;
    const std::size_t idx = std::min<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), probs.size() - 1);
    acc += values[idx];
  }
  return acc / shots;
}

std::string pick_best_bits(const std::vector<double>& probs,
                           const problems::ProblemInstance& instance, int shots,
                           std::uint64_t seed) {
  const auto counts =
      sim::sample_from_probabilities(probs, instance.n_qubits, shots, seed);
  std::string best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::uint64_t best_key = 0;
  for (const auto& [bitstring, count] : counts) {
    (void)count;
    const auto bits = problems::bits_from_string(bitstring);
    const double v = problems::solution_value(instance, bits);
    const std::uint64_t key = problems::bits_to_uint(bits);
    if (v > best_value + 1e-12 || (std::abs(v - best_value) <= 1e-12 && key < best_key)) {
      best_value = v;
      best_key = key;
      best = bitstring;
    }
  }
  return best;
}

std::vector<double> random_angles(int count, Rng& rng) {
  std::vector<double> angles(count);
  for (double& a : angles) a = rng.next_unit() * kPi / 2.0;
  return angles;
}

struct Elimination {
  int variable = 0;  // original index being fixed
  int partner = -1;  // original index it is tied to; -1 fixes to a constant
  int sign = 1;
};

/// Substitute z_variable = sign * z_partner (or z_variable = sign) and drop
/// the variable from the model; `idx` is the current (contiguous) index.
IsingModel reduce_ising(const IsingModel& model, int idx, int partner_idx, int sign) {
  IsingModel out;
  out.n = model.n - 1;
  out.linear.assign(out.n, 0.0);
  out.offset = model.offset;
  const auto remap = [idx](int k) { return k < idx ? k : k - 1; };

  for (int k = 0; k < model.n; ++k) {
    if (model.linear[k] == 0.0) continue;
    if (k == idx) {
      if (partner_idx < 0) {
        out.offset += sign * model.linear[k];
      } else {
        out.linear[remap(partner_idx)] += sign * model.linear[k];
      }
    } else {
      out.linear[remap(k)] += model.linear[k];
    }
  }
  for (const auto& [key, c] : model.quadratic) {
    const auto [a, b] = key;
    if (a != idx && b != idx) {
      out.add_quadratic(remap(a), remap(b), c);
      continue;
    }
    const int other = a == idx ? b : a;
    if (partner_idx < 0) {
      out.linear[remap(other)] += sign * c;
    } else if (other == partner_idx) {
      out.offset += sign * c;  // z_partner^2 = 1
    } else {
      out.add_quadratic(remap(partner_idx), remap(other), sign * c);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::QAOA: return "qaoa";
    case Variant::WSQAOA: return "wsqaoa";
    case Variant::WSInitQAOA: return "wsinitqaoa";
    case Variant::RQAOA: return "rqaoa";
  }
  return "unknown";
}

std::optional<Variant> variant_from_string(std::string_view name) {
  if (name == "qaoa") return Variant::QAOA;
  if (name == "wsqaoa") return Variant::WSQAOA;
  if (name == "wsinitqaoa") return Variant::WSInitQAOA;
  if (name == "rqaoa") return Variant::RQAOA;
  return std::nullopt;
}

void AlgorithmSpec::validate(bool noisy_backend) const {
  const int max_layers = noisy_backend ? 4 : 7;
  if (layers < 1 || layers > max_layers)
    throw std::invalid_argument("spec: layers must lie in [1, " + std::to_string(max_layers) +
                                "] for this backend");
  if (shots < 1) throw std::invalid_argument("spec: shots must be >= 1");
  if (ws_epsilon < 0.0 || ws_epsilon > 0.5)
    throw std::invalid_argument("spec: ws_epsilon must lie in [0, 0.5]");
  if (rqaoa_cutoff < 1) throw std::invalid_argument("spec: rqaoa_cutoff must be >= 1");
  if (optimizer.max_iters < 0 || optimizer.tolerance < 0.0)
    throw std::invalid_argument("spec: bad optimizer settings");
}

sim::Circuit build_qaoa_circuit(const IsingModel& ising, std::span<const double> gammas,
                                std::span<const double> betas, InitialState initial,
                                MixerKind mixer, const std::vector<double>& c_star,
                                double epsilon) {
  if (ising.n < 1) throw std::invalid_argument("build_qaoa_circuit: empty model");
  if (gammas.size() != betas.size() || gammas.empty())
    throw std::invalid_argument("build_qaoa_circuit: need matching gamma/beta per layer");

  std::vector<double> thetas;
  if (initial == InitialState::WarmStart || mixer == MixerKind::WarmStart) {
    if (static_cast<int>(c_star.size()) != ising.n)
      throw std::invalid_argument("build_qaoa_circuit: warm start values missing");
    thetas.resize(ising.n);
    for (int q = 0; q < ising.n; ++q) {
      const double c = std::clamp(c_star[q], epsilon, 1.0 - epsilon);
      thetas[q] = 2.0 * std::asin(std::sqrt(c));
    }
  }

  std::vector<sim::AbstractOp> ops;
  if (initial == InitialState::Plus) {
    for (int q = 0; q < ising.n; ++q) ops.push_back(sim::AbstractOp::h(q));
  } else {
    for (int q = 0; q < ising.n; ++q)
      if (thetas[q] != 0.0) ops.push_back(sim::AbstractOp::ry(q, thetas[q]));
  }

  for (std::size_t layer = 0; layer < gammas.size(); ++layer) {
    const double gamma = gammas[layer];
    const double beta = betas[layer];
    for (int q = 0; q < ising.n; ++q)
      if (ising.linear[q] != 0.0)
        ops.push_back(sim::AbstractOp::rz(q, 2.0 * gamma * ising.linear[q]));
    for (const auto& [key, c] : ising.quadratic)
      if (c != 0.0) ops.push_back(sim::AbstractOp::rzz(key.first, key.second, 2.0 * gamma * c));
    if (mixer == MixerKind::Standard) {
      for (int q = 0; q < ising.n; ++q) ops.push_back(sim::AbstractOp::rx(q, 2.0 * beta));
    } else {
      for (int q = 0; q < ising.n; ++q) {
        if (thetas[q] != 0.0) ops.push_back(sim::AbstractOp::ry(q, -thetas[q]));
        ops.push_back(sim::AbstractOp::rz(q, -2.0 * beta));
        if (thetas[q] != 0.0) ops.push_back(sim::AbstractOp::ry(q, thetas[q]));
      }
    }
  }
  return sim::transpile(ising.n, ops);
}

OptimizeResult optimize_angles(const std::function<double(const std::vector<double>&)>& objective,
                               std::vector<double> initial, const OptimizerSettings& settings) {
  opt::Options options;
  options.tolerance = settings.tolerance;
  options.max_iters = settings.max_iters;
  options.initial_step = settings.initial_step;
  const opt::Result r = opt::minimize(objective, std::move(initial), options);
  return {r.x, r.fx, r.iterations, r.evaluations};
}

Outcome run_algorithm(const AlgorithmSpec& spec, const problems::ProblemInstance& instance,
                      const Backend& backend, std::uint64_t seed) {
  const auto wall_start = Clock::now();
  SimClock sim_clock;

  spec.validate(!backend.ideal());
  instance.validate();
  const int qubit_cap = backend.ideal() ? 24 : 12;
  if (instance.n_qubits > qubit_cap)
    throw std::invalid_argument("run_algorithm: instance exceeds backend qubit cap");

  const auto bnd = problems::bounds(instance, kLowerBoundSamples, instance.seed);
  const Qubo qubo = problems::encode_qubo(instance);
  const IsingModel ising = to_ising(qubo);

  Outcome outcome;
  outcome.variant = spec.variant;
  outcome.layers = spec.layers;
  outcome.lb = bnd.lb;
  outcome.ub = bnd.ub;
  outcome.noise_level = backend.level();
  outcome.shots = spec.shots;
  outcome.run_seed = seed;

  Rng master(mix64(seed, 0xA160ULL, static_cast<std::uint64_t>(spec.variant),
                   static_cast<std::uint64_t>(spec.layers)));
  const sim::NoiseParams timing = backend.timing();

  const bool warm = spec.variant == Variant::WSQAOA || spec.variant == Variant::WSInitQAOA;
  std::vector<double> c_star;
  if (warm) {
    const auto ws_bits = problems::warm_start(instance);
    c_star.assign(ws_bits.begin(), ws_bits.end());
  }

  if (spec.variant != Variant::RQAOA) {
    const InitialState initial = warm ? InitialState::WarmStart : InitialState::Plus;
    const MixerKind mixer =
        spec.variant == Variant::WSQAOA ? MixerKind::WarmStart : MixerKind::Standard;
    const auto build = [&](const std::vector<double>& params) {
      const std::span<const double> gammas(params.data(), spec.layers);
      const std::span<const double> betas(params.data() + spec.layers, spec.layers);
      return build_qaoa_circuit(ising, gammas, betas, initial, mixer, c_star, spec.ws_epsilon);
    };

    const std::vector<double> init = random_angles(2 * spec.layers, master);
    const auto first_circuit = build(init);
    const auto stats = sim::circuit_stats(first_circuit, timing);
    outcome.d_cx = stats.d_cx;
    outcome.n_cx = stats.n_cx;

    const std::vector<double> energies = ising.energy_table();
    int eval_index = 0;
    const auto objective = [&](const std::vector<double>& params) {
      const auto probs = sim_clock.timed([&] { return simulate_probabilities(build(params), backend); });
      return sampled_mean(probs, energies, spec.shots,
                          mix64(seed, 0xE7A1ULL, static_cast<std::uint64_t>(eval_index++)));
    };

    const auto opt = optimize_angles(objective, init, spec.optimizer);
    outcome.optimizer_iters = opt.iterations;
    outcome.quantum_seconds = stats.duration * spec.shots * opt.evaluations;

    const auto final_probs =
        sim_clock.timed([&] { return simulate_probabilities(build(opt.params), backend); });
    outcome.quality = sim::expectation_from_probabilities(final_probs, instance);
    outcome.best_bits =
        pick_best_bits(final_probs, instance, spec.shots, mix64(seed, 0xBE57ULL));
  } else {
    IsingModel current = ising;
    std::vector<int> orig_index(ising.n);
    for (int i = 0; i < ising.n; ++i) orig_index[i] = i;
    std::vector<Elimination> eliminations;
    bool first = true;
    int inner = 0;

    while (current.n > spec.rqaoa_cutoff) {
      // Candidate terms of the current model, ordered for tie-breaking with
      // linear entries encoded as (i, i).
      std::vector<std::pair<std::pair<int, int>, bool>> candidates;
      for (int i = 0; i < current.n; ++i)
        if (current.linear[i] != 0.0) candidates.push_back({{i, i}, true});
      for (const auto& [key, c] : current.quadratic)
        if (c != 0.0) candidates.push_back({key, false});
      std::sort(candidates.begin(), candidates.end());
      if (candidates.empty()) break;

      const auto build = [&](const std::vector<double>& params) {
        const std::span<const double> gammas(params.data(), spec.layers);
        const std::span<const double> betas(params.data() + spec.layers, spec.layers);
        return build_qaoa_circuit(current, gammas, betas, InitialState::Plus,
                                  MixerKind::Standard);
      };
      const std::vector<double> init = random_angles(2 * spec.layers, master);
      const auto circuit = build(init);
      const auto stats = sim::circuit_stats(circuit, timing);
      if (first) {
        outcome.d_cx = stats.d_cx;
        outcome.n_cx = stats.n_cx;
        first = false;
      }

      const std::vector<double> energies = current.energy_table();
      int eval_index = 0;
      const auto objective = [&](const std::vector<double>& params) {
        const auto probs =
            sim_clock.timed([&] { return simulate_probabilities(build(params), backend); });
        return sampled_mean(probs, energies, spec.shots,
                            mix64(seed, 0xE7A1ULL, static_cast<std::uint64_t>(inner),
                                  static_cast<std::uint64_t>(eval_index++)));
      };
      const auto opt = optimize_angles(objective, init, spec.optimizer);
      outcome.optimizer_iters += opt.iterations;
      outcome.quantum_seconds += stats.duration * spec.shots * opt.evaluations;

      const auto probs =
          sim_clock.timed([&] { return simulate_probabilities(build(opt.params), backend); });

      // Correlations <Z_i> and <Z_i Z_j> of the optimised state.
      double best_m = 0.0;
      std::pair<int, int> best_key{-1, -1};
      bool best_linear = false;
      bool have = false;
      for (const auto& [key, is_linear] : candidates) {
        double m = 0.0;
        const std::uint64_t mi = std::uint64_t{1} << key.first;
        const std::uint64_t mj = std::uint64_t{1} << key.second;
        for (std::size_t x = 0; x < probs.size(); ++x) {
          const double zi = (x & mi) ? -1.0 : 1.0;
          const double zj = (x & mj) ? -1.0 : 1.0;
          m += probs[x] * (is_linear ? zi : zi * zj);
        }
        if (!have || std::abs(m) > std::abs(best_m) + 1e-12) {
          best_m = m;
          best_key = key;
          best_linear = is_linear;
          have = true;
        }
      }

      const int sign = best_m < 0.0 ? -1 : 1;
      Elimination elim;
      elim.variable = orig_index[best_key.first];
      elim.partner = best_linear ? -1 : orig_index[best_key.second];
      elim.sign = sign;
      eliminations.push_back(elim);

      current = reduce_ising(current, best_key.first, best_linear ? -1 : best_key.second, sign);
      orig_index.erase(orig_index.begin() + best_key.first);
      ++inner;
    }

    // Brute-force the remainder; ties go to the lowest bitstring.
    std::vector<int> z(instance.n_qubits, 0);
    {
      double best_e = std::numeric_limits<double>::infinity();
      std::uint64_t best_x = 0;
      std::vector<std::uint8_t> bits(current.n);
      for (std::uint64_t x = 0; x < (std::uint64_t{1} << current.n); ++x) {
        for (int i = 0; i < current.n; ++i) bits[i] = static_cast<std::uint8_t>((x >> i) & 1);
        const double e = current.energy_bits(bits);
        if (e < best_e - 1e-12) {
          best_e = e;
          best_x = x;
        }
      }
      for (int i = 0; i < current.n; ++i)
        z[orig_index[i]] = (best_x >> i) & 1 ? -1 : 1;
    }
    for (auto it = eliminations.rbegin(); it != eliminations.rend(); ++it)
      z[it->variable] = it->partner < 0 ? it->sign : it->sign * z[it->partner];

    std::vector<std::uint8_t> bits(instance.n_qubits);
    for (int i = 0; i < instance.n_qubits; ++i) bits[i] = z[i] < 0 ? 1 : 0;
    outcome.quality = problems::solution_value(instance, bits);
    outcome.best_bits = problems::bits_to_string(bits);
  }

  outcome.normalized_y = (outcome.quality - bnd.lb) / (bnd.ub - bnd.lb);
  const double wall = std::chrono::duration<double>(Clock::now() - wall_start).count();
  outcome.classical_seconds = std::max(0.0, wall - sim_clock.seconds);
  outcome.runtime_seconds = outcome.quantum_seconds + outcome.classical_seconds;
  return outcome;
}

}  // namespace qdaw::algo
