#include "qdaw/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace qdaw::sim {

namespace {

bool in_unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void NoiseParams::validate() const {
  if (!in_unit_interval(p1) || !in_unit_interval(p2))
    throw std::invalid_argument("noise: probabilities must lie in [0,1]");
  if (t1 <= 0.0 || t2 <= 0.0 || t_1q < 0.0 || t_2q < 0.0 || t_meas < 0.0)
    throw std::invalid_argument("noise: times must be positive");
  if (t2 > 2.0 * t1 + 1e-18)
    throw std::invalid_argument("noise: T2 must not exceed 2*T1");
  if (level < 0.0) throw std::invalid_argument("noise: level must be >= 0");
  if (level * p2 >= 1.0 || level * p1 >= 1.0)
    throw std::invalid_argument("noise: scaled depolarising probability must stay below 1");
}

KrausChannel::KrausChannel(int arity_, std::vector<std::vector<Complex>> ops)
    : arity(arity_), kraus(std::move(ops)) {
  const std::size_t d = dim();
  std::vector<Complex> sum(d * d, Complex{0.0, 0.0});
  for (const auto& k : kraus) {
    if (k.size() != d * d) throw std::invalid_argument("KrausChannel: operator size mismatch");
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t m = 0; m < d; ++m)
          sum[r * d + c] += std::conj(k[m * d + r]) * k[m * d + c];
  }
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const Complex expected = r == c ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
      if (std::abs(sum[r * d + c] - expected) > 1e-12)
        throw std::runtime_error("KrausChannel: completeness violated");
    }
}

KrausChannel depolarizing_1q(double p) {
  if (!in_unit_interval(p)) throw std::invalid_argument("depolarizing_1q: bad probability");
  const double s0 = std::sqrt(1.0 - 0.75 * p);
  const double s = std::sqrt(p / 4.0);
  const Complex i{0.0, 1.0};
  std::vector<std::vector<Complex>> ops;
  ops.push_back({s0, 0, 0, s0});        // I
  ops.push_back({0, s, s, 0});          // X
  ops.push_back({0, -s * i, s * i, 0}); // Y
  ops.push_back({s, 0, 0, -s});         // Z
  return KrausChannel(1, std::move(ops));
}

KrausChannel depolarizing_2q(double p) {
  if (!in_unit_interval(p)) throw std::invalid_argument("depolarizing_2q: bad probability");
  const Complex i{0.0, 1.0};
  const std::vector<std::vector<Complex>> paulis = {
      {1, 0, 0, 1},        // I
      {0, 1, 1, 0},        // X
      {0, -i, i, 0},       // Y
      {1, 0, 0, -1},       // Z
  };
  std::vector<std::vector<Complex>> ops;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double w = (a == 0 && b == 0) ? std::sqrt(1.0 - 15.0 * p / 16.0)
                                          : std::sqrt(p / 16.0);
      std::vector<Complex> k(16);
      for (int r0 = 0; r0 < 2; ++r0)
        for (int c0 = 0; c0 < 2; ++c0)
          for (int r1 = 0; r1 < 2; ++r1)
            for (int c1 = 0; c1 < 2; ++c1)
              k[(r1 * 2 + r0) * 4 + (c1 * 2 + c0)] =
                  w * paulis[a][r0 * 2 + c0] * paulis[b][r1 * 2 + c1];
      ops.push_back(std::move(k));
    }
  }
  return KrausChannel(2, std::move(ops));
}

KrausChannel thermal_relaxation(double gamma, double lambda) {
  if (!in_unit_interval(gamma) || !in_unit_interval(lambda))
    throw std::invalid_argument("thermal_relaxation: bad decay parameters");
  const double keep = std::sqrt((1.0 - gamma) * (1.0 - lambda));
  std::vector<std::vector<Complex>> ops;
  ops.push_back({1, 0, 0, keep});
  if (gamma > 0.0) ops.push_back({0, std::sqrt(gamma), 0, 0});
  const double dephase = lambda * (1.0 - gamma);
  if (dephase > 0.0) ops.push_back({0, 0, 0, std::sqrt(dephase)});
  return KrausChannel(1, std::move(ops));
}

RelaxationRates relaxation_rates(double duration, double t1, double t2) {
  RelaxationRates r;
  if (duration <= 0.0) return r;
  r.gamma = 1.0 - std::exp(-duration / t1);
  const double inv_tphi = 1.0 / t2 - 0.5 / t1;
  if (inv_tphi > 0.0) r.lambda = 1.0 - std::exp(-2.0 * duration * inv_tphi);
  return r;
}

}  // namespace qdaw::sim
