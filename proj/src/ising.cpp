#include "qdaw/ising.hpp"

#include <stdexcept>

namespace qdaw {

void Qubo::add(int i, int j, double coeff) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n) throw std::out_of_range("Qubo::add: index out of range");
  quad[{i, j}] += coeff;
}

double Qubo::value(const std::vector<std::uint8_t>& bits) const {
  if (static_cast<int>(bits.size()) != n)
    throw std::invalid_argument("Qubo::value: bit count mismatch");
  double v = offset;
  for (const auto& [key, c] : quad) {
    if (bits[key.first] && bits[key.second]) v += c;
  }
  return v;
}

void IsingModel::add_quadratic(int i, int j, double coeff) {
  if (i == j) throw std::invalid_argument("IsingModel: diagonal quadratic term");
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n) throw std::out_of_range("IsingModel: index out of range");
  quadratic[{i, j}] += coeff;
}

double IsingModel::energy_spins(const std::vector<int>& z) const {
  if (static_cast<int>(z.size()) != n)
    throw std::invalid_argument("IsingModel::energy_spins: spin count mismatch");
  double e = offset;
  for (int i = 0; i < n; ++i) e += linear[i] * z[i];
  for (const auto& [key, c] : quadratic) e += c * z[key.first] * z[key.second];
  return e;
}

double IsingModel::energy_bits(const std::vector<std::uint8_t>& bits) const {
  if (static_cast<int>(bits.size()) != n)
    throw std::invalid_argument("IsingModel::energy_bits: bit count mismatch");
  double e = offset;
  for (int i = 0; i < n; ++i) e += linear[i] * (bits[i] ? -1.0 : 1.0);
  for (const auto& [key, c] : quadratic) {
    const double zi = bits[key.first] ? -1.0 : 1.0;
    const double zj = bits[key.second] ? -1.0 : 1.0;
    e += c * zi * zj;
  }
  return e;
}

std::vector<double> IsingModel::energy_table() const {
  if (n > 24) throw std::invalid_argument("IsingModel::energy_table: n > 24");
  const std::size_t dim = std::size_t{1} << n;
  std::vector<double> table(dim, offset);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t mask = std::uint64_t{1} << i;
    const double h = linear[i];
    if (h == 0.0) continue;
    for (std::size_t x = 0; x < dim; ++x) table[x] += (x & mask) ? -h : h;
  }
  for (const auto& [key, c] : quadratic) {
    const std::uint64_t mi = std::uint64_t{1} << key.first;
    const std::uint64_t mj = std::uint64_t{1} << key.second;
    for (std::size_t x = 0; x < dim; ++x) {
      const bool same = ((x & mi) != 0) == ((x & mj) != 0);
      table[x] += same ? c : -c;
    }
  }
  return table;
}

IsingModel to_ising(const Qubo& qubo) {
  IsingModel ising;
  ising.n = qubo.n;
  ising.linear.assign(qubo.n, 0.0);
  ising.offset = qubo.offset;
  for (const auto& [key, c] : qubo.quad) {
    const auto [i, j] = key;
    if (i == j) {
      // c * x_i = c * (1 - z_i) / 2
      ising.linear[i] -= c / 2.0;
      ising.offset += c / 2.0;
    } else {
      // c * x_i x_j = c * (1 - z_i - z_j + z_i z_j) / 4
      ising.linear[i] -= c / 4.0;
      ising.linear[j] -= c / 4.0;
      ising.add_quadratic(i, j, c / 4.0);
      ising.offset += c / 4.0;
    }
  }
  return ising;
}

Qubo to_qubo(const IsingModel& ising) {
  Qubo qubo;
  qubo.n = ising.n;
  qubo.offset = ising.offset;
  for (int i = 0; i < ising.n; ++i) {
    const double h = ising.linear[i];
    if (h == 0.0) continue;
    // h * z_i = h * (1 - 2 x_i)
    qubo.add(i, i, -2.0 * h);
    qubo.offset += h;
  }
  for (const auto& [key, c] : ising.quadratic) {
    const auto [i, j] = key;
    // c * z_i z_j = c * (1 - 2 x_i - 2 x_j + 4 x_i x_j)
    qubo.add(i, i, -2.0 * c);
    qubo.add(j, j, -2.0 * c);
    qubo.add(i, j, 4.0 * c);
    qubo.offset += c;
  }
  return qubo;
}

}  // namespace qdaw
