#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdaw/ising.hpp"

#include "json.hpp"

namespace qdaw::problems {

enum class ProblemKind { MaxCut, MVC, MIS, Partition, Max3Sat };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> problem_kind_from_string(std::string_view name);

/// One 3-literal clause; a literal is a variable index plus a negation flag.
/// Repeated variables within a clause are allowed (they can arise when
/// clauses are drawn uniformly over all configurations).
struct Clause {
  std::array<int, 3> var{};
  std::array<bool, 3> negated{};
};

/// Tagged union over the five optimisation problems. Graph problems
/// (MaxCut/MVC/MIS) use `edges`, Partition uses `weights`, Max3Sat uses
/// `clauses` plus `n_vars`; `n_qubits` is the circuit width (vertices,
/// numbers, or variables + clauses respectively).
struct ProblemInstance {
  ProblemKind kind = ProblemKind::MaxCut;
  int n_qubits = 0;
  std::uint64_t seed = 0;

  std::vector<std::pair<int, int>> edges;  // sorted, u < v, no duplicates
  std::vector<double> weights;
  std::vector<Clause> clauses;
  int n_vars = 0;

  bool is_graph() const {
    return kind == ProblemKind::MaxCut || kind == ProblemKind::MVC ||
           kind == ProblemKind::MIS;
  }

  void validate() const;  // throws on invariant violation
};

struct Bounds {
  double lb = 0.0;  // expected value of a uniformly random solution
  double ub = 0.0;  // classical upper bound, maximisation convention
};

/// Deterministic instance generator. Graphs are G(n, 1/2); Partition weights
/// are uniform in [0, 1]; Max3Sat draws the variable count uniformly in
/// [1, n/3] and each clause uniformly over the (2 n_vars)^3 configurations.
/// Degenerate draws (no edges, or all clauses tautological) are replaced by
/// regenerating with the seed incremented; the effective seed is stored.
ProblemInstance generate_instance(ProblemKind kind, int n_qubits, std::uint64_t seed);

/// Minimisation QUBO whose optimum maps back to the instance optimum.
/// MIS/MVC weight the constraint and objective parts two to one; Max3Sat uses
/// one ancilla qubit per clause to quadratise the triple-literal product.
Qubo encode_qubo(const ProblemInstance& instance);

/// Value of a bit assignment in maximisation convention: cut size, set size
/// (1 if not independent), reciprocal cover size (1/n if not a cover), the
/// smaller partition sum, or the number of satisfied clauses. For Max3Sat
/// only the first n_vars bits are interpreted.
double solution_value(const ProblemInstance& instance, const std::vector<std::uint8_t>& bits);

/// Lower/upper bounds for quality normalisation. MaxCut and Max3Sat lower
/// bounds are analytic; the rest average solution_value over `sample_count`
/// seeded uniform bitstrings. Throws if lb >= ub (degenerate instance).
Bounds bounds(const ProblemInstance& instance, int sample_count, std::uint64_t seed);

using MaxCutWarmStartProvider =
    std::function<std::vector<std::uint8_t>(const ProblemInstance&)>;

/// Default Max-Cut warm start: rank-3 relaxation solved by coordinate
/// ascent, rounded with the best of 20 seeded random hyperplanes, then
/// polished to a 1-flip local optimum (which guarantees a cut >= m/2).
std::vector<std::uint8_t> maxcut_relaxation_warm_start(const ProblemInstance& instance);

/// Classical approximate solution used to warm-start the quantum algorithms:
/// maximal-matching cover for MVC (its complement for MIS), decreasing-order
/// greedy assignment for Partition, derandomised conditional expectations for
/// Max3Sat, and the (pluggable) relaxation-based heuristic for MaxCut.
std::vector<std::uint8_t> warm_start(const ProblemInstance& instance);
std::vector<std::uint8_t> warm_start(const ProblemInstance& instance,
                                     const MaxCutWarmStartProvider& maxcut_provider);

struct BruteForceResult {
  std::vector<std::uint8_t> bits;
  double value = 0.0;
};

/// Exact maximiser of solution_value; ties resolved toward the lowest
/// bitstring read as an unsigned integer (qubit 0 = least significant bit).
/// Requires n_qubits <= 24.
BruteForceResult brute_force_optimum(const ProblemInstance& instance);

/// Canonical JSON: {kind, n_qubits, seed, edges|weights|clauses[, n_vars]}.
nlohmann::ordered_json to_json(const ProblemInstance& instance);
ProblemInstance instance_from_json(const nlohmann::json& j);
std::string canonical_json(const ProblemInstance& instance);

/// Little-endian bitstring helpers (character i is qubit i).
std::string bits_to_string(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> bits_from_string(const std::string& s);
std::uint64_t bits_to_uint(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> bits_from_uint(std::uint64_t x, int n);

}  // namespace qdaw::problems
