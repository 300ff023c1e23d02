#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qdaw/problems.hpp"
#include "qdaw/qaoa.hpp"
#include "qdaw/store.hpp"

namespace qdaw::sel {

/// The seven quantities selection objectives and constraints range over.
enum class Variable {
  Runtime,                             // T
  SolutionQuality,                     // f
  RelativeSolutionQuality,             // f / UB
  SolutionQualityPerRuntime,           // f / T
  RelativeSolutionQualityPerRuntime,   // f / (UB * T)
  RuntimePerSolutionQuality,           // T / f
  RuntimePerRelativeSolutionQuality,   // T / (UB * f)
};

std::string_view to_string(Variable variable);
std::optional<Variable> variable_from_string(std::string_view name);

using VariableValues = std::map<Variable, double>;

struct LinearExpr {
  std::map<Variable, double> terms;
  double constant = 0.0;

  double eval(const VariableValues& values) const;
  std::string str() const;
};

enum class Relation { LessEqual, GreaterEqual };

struct Constraint {
  LinearExpr expr;
  Relation relation = Relation::LessEqual;
  double bound = 0.0;

  bool satisfied(const VariableValues& values) const;
  std::string str() const;
};

enum class Direction { Maximize, Minimize };

struct Objective {
  Direction direction = Direction::Maximize;
  LinearExpr expr;
};

/// One requirement block. Blocks nest: constraints accumulate over the whole
/// stack and the innermost declared objective wins.
struct RequirementScope {
  std::optional<Objective> objective;
  std::vector<Constraint> constraints;
};

class ScopeStack {
 public:
  void push(RequirementScope scope) { scopes_.push_back(std::move(scope)); }
  void pop();
  bool empty() const { return scopes_.empty(); }

  /// Conjunction of all constraints; objective of the innermost scope that
  /// declares one.
  RequirementScope flattened() const;

 private:
  std::vector<RequirementScope> scopes_;
};

struct Candidate {
  algo::AlgorithmSpec spec;
  double noise_level = 0.0;
};

struct CandidateRegistry {
  std::vector<Candidate> candidates;

  /// All (variant, layers) pairs for layers in [1, max_layers] at one level.
  static CandidateRegistry grid(const std::vector<algo::Variant>& variants, int max_layers,
                                double noise_level, const algo::AlgorithmSpec& base);
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExprParseError : std::runtime_error {
  ExprParseError(const std::string& message, std::size_t column_)
      : std::runtime_error(message), column(column_) {}
  std::size_t column = 0;  // 1-based position in the input
};

/// Model-predicted values of all seven variables for one candidate on one
/// instance. Ratio variables with non-positive denominators are reported via
/// an error naming the first undefined variable.
VariableValues evaluate_variables(const problems::ProblemInstance& instance,
                                  const algo::AlgorithmSpec& spec, double noise_level,
                                  const store::TrainedModels& trained);

struct Selection {
  Candidate chosen;
  VariableValues predicted;
};

/// Evaluates every candidate, filters by the scope's constraints and returns
/// the arg-optimum of the objective. Ties break toward lower predicted
/// runtime, then fewer layers, then variant order. Throws InfeasibleError
/// when no candidate satisfies the constraints and UntrainedModelError when a
/// candidate's models are missing.
Selection select(const problems::ProblemInstance& instance, const RequirementScope& scope,
                 const CandidateRegistry& registry, const store::TrainedModels& trained);

struct SolveOptions {
  sim::NoiseParams noise;                 // parameters for noisy candidates
  std::filesystem::path models_dir;      // enables the retrain policy if set
  int retrain_threshold = 50;
  std::uint64_t seed = 1;
};

/// select + execute + persist: runs the chosen algorithm, appends the record
/// to the store (failures are recorded to the failure sidecar), and refits
/// stale models per the retrain policy.
algo::Outcome solve(const problems::ProblemInstance& instance, const RequirementScope& scope,
                    const CandidateRegistry& registry, store::TrainedModels& trained,
                    store::ResultStore& results, const SolveOptions& options);

// ---------------------------------------------------------------------------
// Expression grammar: `expr (<=|>=) number` with expr a signed sum of
// `coef*VARIABLE` terms (bare variables and numeric constants allowed);
// whitespace-insensitive. Parse errors carry the 1-based column.

LinearExpr parse_expr(std::string_view text);
Constraint parse_constraint(std::string_view text);

/// "maximize: <expr>" or "minimize: <expr>"; a bare expression maximises.
Objective parse_objective(std::string_view text);

}  // namespace qdaw::sel
