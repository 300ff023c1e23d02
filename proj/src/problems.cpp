#include "qdaw/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qdaw/rng.hpp"

namespace qdaw::problems {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Literal as an affine form c0 + k * x_idx with c0 in {0,1}, k in {-1,+1}.
struct Lit {
  double c0;
  double k;
  int idx;
};

Lit make_lit(int var, bool negated) {
  return negated ? Lit{1.0, -1.0, var} : Lit{0.0, 1.0, var};
}

void add_linear(Qubo& q, double coeff, const Lit& a) {
  q.offset += coeff * a.c0;
  if (a.k != 0.0) q.add(a.idx, a.idx, coeff * a.k);
}

void add_product(Qubo& q, double coeff, const Lit& a, const Lit& b) {
  q.offset += coeff * a.c0 * b.c0;
  if (b.k != 0.0) q.add(b.idx, b.idx, coeff * a.c0 * b.k);
  if (a.k != 0.0) q.add(a.idx, a.idx, coeff * b.c0 * a.k);
  if (a.k != 0.0 && b.k != 0.0) {
    // x_i * x_i = x_i keeps repeated-variable clauses well defined
    q.add(a.idx, b.idx, coeff * a.k * b.k);
  }
}

/// Probability that `clause` is satisfied under a uniform assignment of its
/// unassigned variables; `assignment` entries are 0, 1 or -1 (unassigned).
double clause_sat_probability(const Clause& clause, const std::vector<int>& assignment) {
  std::vector<int> free_vars;
  for (int t = 0; t < 3; ++t) {
    const int v = clause.var[t];
    if (assignment[v] < 0 &&
        std::find(free_vars.begin(), free_vars.end(), v) == free_vars.end()) {
      free_vars.push_back(v);
    }
  }
  const int k = static_cast<int>(free_vars.size());
  int satisfied = 0;
  for (int mask = 0; mask < (1 << k); ++mask) {
    bool sat = false;
    for (int t = 0; t < 3 && !sat; ++t) {
      const int v = clause.var[t];
      int value = assignment[v];
      if (value < 0) {
        const auto it = std::find(free_vars.begin(), free_vars.end(), v);
        value = (mask >> (it - free_vars.begin())) & 1;
      }
      sat = (value == 1) != clause.negated[t];
    }
    if (sat) ++satisfied;
  }
  return static_cast<double>(satisfied) / static_cast<double>(1 << k);
}

double clause_sat_probability(const Clause& clause, int n_vars) {
  const std::vector<int> unassigned(n_vars, -1);
  return clause_sat_probability(clause, unassigned);
}

double mis_upper_bound(int n, int m) {
  return 0.5 + std::sqrt(0.25 + static_cast<double>(n) * n - n - 2.0 * m);
}

ProblemInstance generate_once(ProblemKind kind, int n_qubits, std::uint64_t seed) {
  ProblemInstance inst;
  inst.kind = kind;
  inst.n_qubits = n_qubits;
  inst.seed = seed;
  Rng rng(mix64(seed, 0x9D0BULL, static_cast<std::uint64_t>(kind)));

  switch (kind) {
    case ProblemKind::MaxCut:
    case ProblemKind::MVC:
    case ProblemKind::MIS:
      for (int u = 0; u < n_qubits; ++u)
        for (int v = u + 1; v < n_qubits; ++v)
          if (rng.next_bool()) inst.edges.emplace_back(u, v);
      break;
    case ProblemKind::Partition:
      inst.weights.reserve(n_qubits);
      for (int i = 0; i < n_qubits; ++i) inst.weights.push_back(rng.next_unit());
      break;
    case ProblemKind::Max3Sat: {
      const int max_vars = n_qubits / 3;
      inst.n_vars = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_vars)));
      const int n_clauses = n_qubits - inst.n_vars;
      inst.clauses.reserve(n_clauses);
      for (int c = 0; c < n_clauses; ++c) {
        Clause clause;
        for (int t = 0; t < 3; ++t) {
          clause.var[t] = static_cast<int>(rng.next_below(inst.n_vars));
          clause.negated[t] = rng.next_bool();
        }
        inst.clauses.push_back(clause);
      }
      break;
    }
  }
  return inst;
}

bool is_degenerate(const ProblemInstance& inst) {
  switch (inst.kind) {
    case ProblemKind::MaxCut:
    case ProblemKind::MVC:
    case ProblemKind::MIS:
      return inst.edges.empty();
    case ProblemKind::Partition: {
      double total = 0.0;
      for (double w : inst.weights) total += w;
      return total <= 0.0;
    }
    case ProblemKind::Max3Sat:
      // lb == ub iff every clause is a tautology
      for (const auto& clause : inst.clauses)
        if (clause_sat_probability(clause, inst.n_vars) < 1.0) return false;
      return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::MaxCut: return "maxcut";
    case ProblemKind::MVC: return "mvc";
    case ProblemKind::MIS: return "mis";
    case ProblemKind::Partition: return "partition";
    case ProblemKind::Max3Sat: return "max3sat";
  }
  return "unknown";
}

std::optional<ProblemKind> problem_kind_from_string(std::string_view name) {
  if (name == "maxcut") return ProblemKind::MaxCut;
  if (name == "mvc") return ProblemKind::MVC;
  if (name == "mis") return ProblemKind::MIS;
  if (name == "partition") return ProblemKind::Partition;
  if (name == "max3sat") return ProblemKind::Max3Sat;
  return std::nullopt;
}

void ProblemInstance::validate() const {
  if (n_qubits < 2) fail("instance: n_qubits must be >= 2");
  if (is_graph()) {
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto [u, v] = edges[i];
      if (u < 0 || v >= n_qubits || u >= v) fail("instance: bad edge");
      if (i > 0 && edges[i - 1] >= edges[i]) fail("instance: edges not sorted/unique");
    }
  } else if (kind == ProblemKind::Partition) {
    if (static_cast<int>(weights.size()) != n_qubits) fail("instance: weight count mismatch");
    for (double w : weights)
      if (!std::isfinite(w) || w < 0.0) fail("instance: weight must be finite and non-negative");
  } else {
    if (n_qubits < 4) fail("instance: Max3Sat needs n_qubits >= 4");
    if (n_vars < 1 || n_vars + static_cast<int>(clauses.size()) != n_qubits)
      fail("instance: n_vars + n_clauses != n_qubits");
    for (const auto& clause : clauses)
      for (int t = 0; t < 3; ++t)
        if (clause.var[t] < 0 || clause.var[t] >= n_vars) fail("instance: clause variable out of range");
  }
}

ProblemInstance generate_instance(ProblemKind kind, int n_qubits, std::uint64_t seed) {
  const int min_n = kind == ProblemKind::Max3Sat ? 4 : 2;
  if (n_qubits < min_n)
    fail("generate_instance: n_qubits must be >= " + std::to_string(min_n) + " for " +
         std::string(to_string(kind)));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ProblemInstance inst = generate_once(kind, n_qubits, seed + attempt);
    if (!is_degenerate(inst)) {
      inst.validate();
      return inst;
    }
  }
  throw std::runtime_error("generate_instance: no non-degenerate instance found");
}

Qubo encode_qubo(const ProblemInstance& inst) {
  inst.validate();
  Qubo q;
  q.n = inst.n_qubits;
  switch (inst.kind) {
    case ProblemKind::MaxCut:
      // minimise -(number of cut edges)
      for (const auto& [u, v] : inst.edges) {
        q.add(u, u, -1.0);
        q.add(v, v, -1.0);
        q.add(u, v, 2.0);
      }
      break;
    case ProblemKind::MVC:
      // 2 * sum (1-x_u)(1-x_v) + sum x_v, constraint twice the objective
      for (const auto& [u, v] : inst.edges) {
        q.offset += 2.0;
        q.add(u, u, -2.0);
        q.add(v, v, -2.0);
        q.add(u, v, 2.0);
      }
      for (int v = 0; v < inst.n_qubits; ++v) q.add(v, v, 1.0);
      break;
    case ProblemKind::MIS:
      // 2 * sum x_u x_v - sum x_v
      for (const auto& [u, v] : inst.edges) q.add(u, v, 2.0);
      for (int v = 0; v < inst.n_qubits; ++v) q.add(v, v, -1.0);
      break;
    case ProblemKind::Partition: {
      // (sum w_i z_i)^2 in spin form, converted to binary form
      IsingModel ising;
      ising.n = inst.n_qubits;
      ising.linear.assign(inst.n_qubits, 0.0);
      for (int i = 0; i < inst.n_qubits; ++i) {
        ising.offset += inst.weights[i] * inst.weights[i];
        for (int j = i + 1; j < inst.n_qubits; ++j)
          ising.add_quadratic(i, j, 2.0 * inst.weights[i] * inst.weights[j]);
      }
      q = to_qubo(ising);
      break;
    }
    case ProblemKind::Max3Sat: {
      // Per clause with ancilla w: the satisfaction indicator equals
      // l1+l2+l3 - l1l2 - l1l3 - l2l3 + max_w w(l1+l2+l3-2); the total is
      // negated into a minimisation QUBO.
      for (std::size_t c = 0; c < inst.clauses.size(); ++c) {
        const Clause& clause = inst.clauses[c];
        const Lit w{0.0, 1.0, inst.n_vars + static_cast<int>(c)};
        std::array<Lit, 3> lit{};
        for (int t = 0; t < 3; ++t) lit[t] = make_lit(clause.var[t], clause.negated[t]);
        for (int t = 0; t < 3; ++t) add_linear(q, -1.0, lit[t]);
        for (int a = 0; a < 3; ++a)
          for (int b = a + 1; b < 3; ++b) add_product(q, 1.0, lit[a], lit[b]);
        for (int t = 0; t < 3; ++t) add_product(q, -1.0, w, lit[t]);
        add_linear(q, 2.0, w);
      }
      break;
    }
  }
  return q;
}

double solution_value(const ProblemInstance& inst, const std::vector<std::uint8_t>& bits) {
  if (static_cast<int>(bits.size()) != inst.n_qubits)
    throw std::invalid_argument("solution_value: bit count mismatch");
  switch (inst.kind) {
    case ProblemKind::MaxCut: {
      int cut = 0;
      for (const auto& [u, v] : inst.edges) cut += bits[u] != bits[v];
      return cut;
    }
    case ProblemKind::MIS: {
      for (const auto& [u, v] : inst.edges)
        if (bits[u] && bits[v]) return 1.0;  // invalid: worst possible solution
      return std::accumulate(bits.begin(), bits.end(), 0.0);
    }
    case ProblemKind::MVC: {
      for (const auto& [u, v] : inst.edges)
        if (!bits[u] && !bits[v]) return 1.0 / inst.n_qubits;  // not a cover
      const int size = static_cast<int>(std::accumulate(bits.begin(), bits.end(), 0));
      return 1.0 / std::max(size, 1);
    }
    case ProblemKind::Partition: {
      double side = 0.0, total = 0.0;
      for (int i = 0; i < inst.n_qubits; ++i) {
        total += inst.weights[i];
        if (bits[i]) side += inst.weights[i];
      }
      return std::min(side, total - side);
    }
    case ProblemKind::Max3Sat: {
      int satisfied = 0;
      for (const auto& clause : inst.clauses) {
        bool sat = false;
        for (int t = 0; t < 3 && !sat; ++t)
          sat = (bits[clause.var[t]] == 1) != clause.negated[t];
        satisfied += sat;
      }
      return satisfied;
    }
  }
  return 0.0;
}

Bounds bounds(const ProblemInstance& inst, int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("bounds: sample_count must be >= 1");
  inst.validate();
  const int n = inst.n_qubits;
  const int m = static_cast<int>(inst.edges.size());
  Bounds b;
  bool sampled_lb = false;
  switch (inst.kind) {
    case ProblemKind::MaxCut:
      b.lb = m / 2.0;
      b.ub = m;
      break;
    case ProblemKind::MIS:
      b.ub = mis_upper_bound(n, m);
      sampled_lb = true;
      break;
    case ProblemKind::MVC: {
      const double cover_size_lb = n - mis_upper_bound(n, m);
      if (cover_size_lb <= 1e-9)
        throw std::runtime_error("bounds: degenerate MVC instance (no usable upper bound)");
      b.ub = 1.0 / cover_size_lb;
      sampled_lb = true;
      break;
    }
    case ProblemKind::Partition: {
      double total = 0.0;
      for (double w : inst.weights) total += w;
      b.ub = total / 2.0;
      sampled_lb = true;
      break;
    }
    case ProblemKind::Max3Sat: {
      b.ub = static_cast<double>(inst.clauses.size());
      double expected = 0.0;
      for (const auto& clause : inst.clauses) expected += clause_sat_probability(clause, inst.n_vars);
      b.lb = expected;
      break;
    }
  }
  if (sampled_lb) {
    Rng rng(mix64(seed, 0x1BULL));
    std::vector<std::uint8_t> bits(n);
    double sum = 0.0;
    for (int s = 0; s < sample_count; ++s) {
      const std::uint64_t word = rng.next_u64();
      for (int i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((word >> i) & 1);
      sum += solution_value(inst, bits);
    }
    b.lb = sum / sample_count;
  }
  if (!(b.lb < b.ub - 1e-12))
    throw std::runtime_error("bounds: degenerate instance with lb >= ub");
  return b;
}

std::vector<std::uint8_t> maxcut_relaxation_warm_start(const ProblemInstance& inst) {
  const int n = inst.n_qubits;
  Rng rng(mix64(inst.seed, 0x6A3ULL));

  std::vector<std::vector<int>> adj(n);
  for (const auto& [u, v] : inst.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }

  // Unit vectors on the sphere; coordinate step v_u = -normalise(sum of
  // neighbours) exactly minimises the relaxed objective in v_u.
  std::vector<std::array<double, 3>> vec(n);
  for (auto& v : vec) {
    double norm = 0.0;
    do {
      for (double& x : v) x = rng.next_normal();
      norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    } while (norm < 1e-12);
    for (double& x : v) x /= norm;
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    for (int u = 0; u < n; ++u) {
      std::array<double, 3> g{0.0, 0.0, 0.0};
      for (int w : adj[u])
        for (int k = 0; k < 3; ++k) g[k] += vec[w][k];
      const double norm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      if (norm < 1e-12) continue;
      for (int k = 0; k < 3; ++k) vec[u][k] = -g[k] / norm;
    }
  }

  // Random-hyperplane rounding, best of 20.
  std::vector<std::uint8_t> best(n, 0), bits(n);
  double best_cut = -1.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 3> plane{rng.next_normal(), rng.next_normal(), rng.next_normal()};
    for (int u = 0; u < n; ++u) {
      const double dot = plane[0] * vec[u][0] + plane[1] * vec[u][1] + plane[2] * vec[u][2];
      bits[u] = dot >= 0.0 ? 1 : 0;
    }
    const double cut = solution_value(inst, bits);
    if (cut > best_cut) {
      best_cut = cut;
      best = bits;
    }
  }

  // 1-flip local search; at a local optimum every vertex has at least half
  // its incident edges cut, so the cut is >= m/2.
  bool improved = true;
  while (improved) {
    improved = false;
    for (int u = 0; u < n; ++u) {
      int delta = 0;
      for (int w : adj[u]) delta += (best[u] == best[w]) ? 1 : -1;
      if (delta > 0) {
        best[u] ^= 1;
        improved = true;
      }
    }
  }
  return best;
}

std::vector<std::uint8_t> warm_start(const ProblemInstance& inst) {
  return warm_start(inst, maxcut_relaxation_warm_start);
}

std::vector<std::uint8_t> warm_start(const ProblemInstance& inst,
                                     const MaxCutWarmStartProvider& maxcut_provider) {
  inst.validate();
  const int n = inst.n_qubits;
  switch (inst.kind) {
    case ProblemKind::MaxCut:
      return maxcut_provider(inst);
    case ProblemKind::MVC:
    case ProblemKind::MIS: {
      // Both endpoints of a greedy maximal matching form a 2-approximate
      // cover; its complement is an independent set.
      std::vector<std::uint8_t> cover(n, 0);
      for (const auto& [u, v] : inst.edges)
        if (!cover[u] && !cover[v]) cover[u] = cover[v] = 1;
      if (inst.kind == ProblemKind::MVC) return cover;
      for (auto& b : cover) b ^= 1;
      return cover;
    }
    case ProblemKind::Partition: {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return inst.weights[a] > inst.weights[b]; });
      std::vector<std::uint8_t> bits(n, 0);
      double side0 = 0.0, side1 = 0.0;
      for (int i : order) {
        if (side0 <= side1) {
          side0 += inst.weights[i];
        } else {
          side1 += inst.weights[i];
          bits[i] = 1;
        }
      }
      return bits;
    }
    case ProblemKind::Max3Sat: {
      // Conditional expectations: fixes each variable to the value with the
      // larger expected number of satisfied clauses, so the result is at
      // least the expectation of a uniformly random assignment.
      std::vector<int> assignment(inst.n_vars, -1);
      for (int i = 0; i < inst.n_vars; ++i) {
        double expect[2];
        for (int b = 0; b < 2; ++b) {
          assignment[i] = b;
          double e = 0.0;
          for (const auto& clause : inst.clauses) e += clause_sat_probability(clause, assignment);
          expect[b] = e;
        }
        assignment[i] = expect[1] > expect[0] ? 1 : 0;
      }
      std::vector<std::uint8_t> bits(n, 0);
      for (int i = 0; i < inst.n_vars; ++i) bits[i] = static_cast<std::uint8_t>(assignment[i]);
      // Ancillas take the value that minimises the QUBO given the assignment.
      for (std::size_t c = 0; c < inst.clauses.size(); ++c) {
        const Clause& clause = inst.clauses[c];
        int true_lits = 0;
        for (int t = 0; t < 3; ++t)
          true_lits += (assignment[clause.var[t]] == 1) != clause.negated[t];
        bits[inst.n_vars + c] = true_lits >= 2 ? 1 : 0;
      }
      return bits;
    }
  }
  return {};
}

BruteForceResult brute_force_optimum(const ProblemInstance& inst) {
  inst.validate();
  if (inst.n_qubits > 24) throw std::invalid_argument("brute_force_optimum: n_qubits > 24");
  const int relevant = inst.kind == ProblemKind::Max3Sat ? inst.n_vars : inst.n_qubits;
  BruteForceResult best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> bits(inst.n_qubits, 0);
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << relevant); ++x) {
    for (int i = 0; i < relevant; ++i) bits[i] = static_cast<std::uint8_t>((x >> i) & 1);
    const double v = solution_value(inst, bits);
    if (v > best.value) {
      best.value = v;
      best.bits = bits;
    }
  }
  return best;
}

nlohmann::ordered_json to_json(const ProblemInstance& inst) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(inst.kind));
  j["n_qubits"] = inst.n_qubits;
  j["seed"] = inst.seed;
  switch (inst.kind) {
    case ProblemKind::MaxCut:
    case ProblemKind::MVC:
    case ProblemKind::MIS: {
      auto edges = nlohmann::ordered_json::array();
      for (const auto& [u, v] : inst.edges) edges.push_back({u, v});
      j["edges"] = std::move(edges);
      break;
    }
    case ProblemKind::Partition:
      j["weights"] = inst.weights;
      break;
    case ProblemKind::Max3Sat: {
      j["n_vars"] = inst.n_vars;
      auto clauses = nlohmann::ordered_json::array();
      for (const auto& clause : inst.clauses) {
        auto lits = nlohmann::ordered_json::array();
        for (int t = 0; t < 3; ++t) lits.push_back({clause.var[t], clause.negated[t] ? 1 : 0});
        clauses.push_back(std::move(lits));
      }
      j["clauses"] = std::move(clauses);
      break;
    }
  }
  return j;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
  ProblemInstance inst;
  const auto kind = problem_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) fail("instance_from_json: unknown kind");
  inst.kind = *kind;
  inst.n_qubits = j.at("n_qubits").get<int>();
  inst.seed = j.at("seed").get<std::uint64_t>();
  if (inst.is_graph()) {
    for (const auto& e : j.at("edges"))
      inst.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    std::sort(inst.edges.begin(), inst.edges.end());
  } else if (inst.kind == ProblemKind::Partition) {
    inst.weights = j.at("weights").get<std::vector<double>>();
  } else {
    inst.n_vars = j.at("n_vars").get<int>();
    for (const auto& cj : j.at("clauses")) {
      Clause clause;
      for (int t = 0; t < 3; ++t) {
        clause.var[t] = cj.at(t).at(0).get<int>();
        clause.negated[t] = cj.at(t).at(1).get<int>() != 0;
      }
      inst.clauses.push_back(clause);
    }
  }
  inst.validate();
  return inst;
}

std::string canonical_json(const ProblemInstance& inst) { return to_json(inst).dump(); }

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

std::vector<std::uint8_t> bits_from_string(const std::string& s) {
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') fail("bits_from_string: bad character");
    bits[i] = s[i] == '1';
  }
  return bits;
}

std::uint64_t bits_to_uint(const std::vector<std::uint8_t>& bits) {
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) x |= std::uint64_t{1} << i;
  return x;
}

std::vector<std::uint8_t> bits_from_uint(std::uint64_t x, int n) {
  std::vector<std::uint8_t> bits(n, 0);
  for (int i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((x >> i) & 1);
  return bits;
}

}  // namespace qdaw::problems
