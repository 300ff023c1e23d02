#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace qdaw {

/// Quadratic unconstrained binary objective: minimise x^T Q x + offset over
/// x in {0,1}^n. Diagonal entries (i,i) are the linear terms. Keys are stored
/// with i <= j, so iteration order is deterministic.
struct Qubo {
  int n = 0;
  std::map<std::pair<int, int>, double> quad;
  double offset = 0.0;

  /// Accumulate a coefficient; (i, j) is normalised to i <= j.
  void add(int i, int j, double coeff);

  double value(const std::vector<std::uint8_t>& bits) const;
};

/// Spin form of a Qubo: minimise sum h_i z_i + sum J_ij z_i z_j + offset over
/// z in {-1,+1}^n. Quadratic keys satisfy i < j.
struct IsingModel {
  int n = 0;
  std::vector<double> linear;
  std::map<std::pair<int, int>, double> quadratic;
  double offset = 0.0;

  void add_quadratic(int i, int j, double coeff);

  double energy_spins(const std::vector<int>& z) const;

  /// Energy of the spin assignment induced by bits via z = 1 - 2x.
  double energy_bits(const std::vector<std::uint8_t>& bits) const;

  /// Energies for all 2^n assignments, indexed by the bitstring read as an
  /// unsigned integer with qubit 0 as the least significant bit. n <= 24.
  std::vector<double> energy_table() const;
};

/// Substitution x = (1 - z) / 2; preserves the objective on every assignment.
IsingModel to_ising(const Qubo& qubo);

/// Substitution z = 1 - 2x; inverse of to_ising up to floating-point error.
Qubo to_qubo(const IsingModel& ising);

}  // namespace qdaw
