#include "qdaw/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <tuple>

namespace qdaw::sel {

namespace {

constexpr double kQualityFloor = 1e-9;

const Variable kAllVariables[] = {
    Variable::Runtime,
    Variable::SolutionQuality,
    Variable::RelativeSolutionQuality,
    Variable::SolutionQualityPerRuntime,
    Variable::RelativeSolutionQualityPerRuntime,
    Variable::RuntimePerSolutionQuality,
    Variable::RuntimePerRelativeSolutionQuality,
};

struct CandidatePrediction {
  VariableValues values;
  std::vector<Variable> undefined;
};

/// Builds the candidate's first circuit (fixed placeholder angles keep the
/// native-gate structure identical to a real run) and predicts f and T.
CandidatePrediction predict_candidate(const problems::ProblemInstance& instance,
                                      const algo::AlgorithmSpec& spec, double noise_level,
                                      const store::TrainedModels& trained) {
  const models::ModelBundle* bundle = trained.find(spec.variant, instance.kind);
  if (!bundle)
    throw models::UntrainedModelError("no models for " +
                                      std::string(algo::to_string(spec.variant)) + " on " +
                                      std::string(problems::to_string(instance.kind)));

  const IsingModel ising = to_ising(problems::encode_qubo(instance));
  const bool warm =
      spec.variant == algo::Variant::WSQAOA || spec.variant == algo::Variant::WSInitQAOA;
  std::vector<double> c_star;
  if (warm) {
    const auto bits = problems::warm_start(instance);
    c_star.assign(bits.begin(), bits.end());
  }
  const std::vector<double> gammas(spec.layers, 0.3);
  const std::vector<double> betas(spec.layers, 0.3);
  const auto circuit = algo::build_qaoa_circuit(
      ising, gammas, betas, warm ? algo::InitialState::WarmStart : algo::InitialState::Plus,
      spec.variant == algo::Variant::WSQAOA ? algo::MixerKind::WarmStart
                                            : algo::MixerKind::Standard,
      c_star, spec.ws_epsilon);
  const auto stats = sim::circuit_stats(
      circuit, sim::NoiseParams::baseline(noise_level > 0.0 ? noise_level : 1.0));

  const auto bounds = problems::bounds(instance, 2000, instance.seed);
  models::InstanceFeatures features;
  features.n = instance.n_qubits;
  features.d = spec.layers;
  features.d_cx = stats.d_cx;
  features.n_cx = stats.n_cx;
  features.lb = bounds.lb;
  features.ub = bounds.ub;

  const double f = bundle->predict_quality(features, noise_level);
  const double t = bundle->predict_runtime(stats.d_cx, noise_level);
  const double ub = bounds.ub;

  CandidatePrediction prediction;
  prediction.values[Variable::Runtime] = t;
  prediction.values[Variable::SolutionQuality] = f;
  if (ub > 0.0) prediction.values[Variable::RelativeSolutionQuality] = f / ub;
  const bool f_ok = f > kQualityFloor;
  const bool t_ok = t > 0.0;
  if (f_ok && t_ok) {
    prediction.values[Variable::SolutionQualityPerRuntime] = f / t;
    prediction.values[Variable::RelativeSolutionQualityPerRuntime] = f / (ub * t);
    prediction.values[Variable::RuntimePerSolutionQuality] = t / f;
    prediction.values[Variable::RuntimePerRelativeSolutionQuality] = t / (ub * f);
  } else {
    prediction.undefined = {Variable::SolutionQualityPerRuntime,
                            Variable::RelativeSolutionQualityPerRuntime,
                            Variable::RuntimePerSolutionQuality,
                            Variable::RuntimePerRelativeSolutionQuality};
  }
  return prediction;
}

bool references_undefined(const LinearExpr& expr, const std::vector<Variable>& undefined) {
  for (const auto& [variable, coeff] : expr.terms) {
    if (coeff == 0.0) continue;
    if (std::find(undefined.begin(), undefined.end(), variable) != undefined.end()) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(Variable variable) {
  switch (variable) {
    case Variable::Runtime: return "RUNTIME";
    case Variable::SolutionQuality: return "SOLUTION_QUALITY";
    case Variable::RelativeSolutionQuality: return "RELATIVE_SOLUTION_QUALITY";
    case Variable::SolutionQualityPerRuntime: return "SOLUTION_QUALITY_PER_RUNTIME";
    case Variable::RelativeSolutionQualityPerRuntime:
      return "RELATIVE_SOLUTION_QUALITY_PER_RUNTIME";
    case Variable::RuntimePerSolutionQuality: return "RUNTIME_PER_SOLUTION_QUALITY";
    case Variable::RuntimePerRelativeSolutionQuality:
      return "RUNTIME_PER_RELATIVE_SOLUTION_QUALITY";
  }
  return "UNKNOWN";
}

std::optional<Variable> variable_from_string(std::string_view name) {
  for (const Variable v : kAllVariables)
    if (name == to_string(v)) return v;
  return std::nullopt;
}

double LinearExpr::eval(const VariableValues& values) const {
  double acc = constant;
  for (const auto& [variable, coeff] : terms) acc += coeff * values.at(variable);
  return acc;
}

std::string LinearExpr::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [variable, coeff] : terms) {
    if (!first) os << (coeff < 0 ? " - " : " + ");
    else if (coeff < 0) os << "-";
    first = false;
    if (std::abs(std::abs(coeff) - 1.0) > 1e-12) os << std::abs(coeff) << "*";
    os << to_string(variable);
  }
  if (constant != 0.0 || first) {
    if (!first) os << (constant < 0 ? " - " : " + ");
    os << std::abs(constant);
  }
  return os.str();
}

bool Constraint::satisfied(const VariableValues& values) const {
  const double v = expr.eval(values);
  return relation == Relation::LessEqual ? v <= bound : v >= bound;
}

std::string Constraint::str() const {
  return expr.str() + (relation == Relation::LessEqual ? " <= " : " >= ") +
         std::to_string(bound);
}

void ScopeStack::pop() {
  if (scopes_.empty()) throw std::logic_error("scope stack underflow");
  scopes_.pop_back();
}

RequirementScope ScopeStack::flattened() const {
  RequirementScope out;
  for (const auto& scope : scopes_) {
    for (const auto& constraint : scope.constraints) out.constraints.push_back(constraint);
    if (scope.objective) out.objective = scope.objective;  // innermost wins
  }
  return out;
}

CandidateRegistry CandidateRegistry::grid(const std::vector<algo::Variant>& variants,
                                          int max_layers, double noise_level,
                                          const algo::AlgorithmSpec& base) {
  CandidateRegistry registry;
  for (const auto variant : variants) {
    for (int layers = 1; layers <= max_layers; ++layers) {
      Candidate candidate;
      candidate.spec = base;
      candidate.spec.variant = variant;
      candidate.spec.layers = layers;
      candidate.noise_level = noise_level;
      registry.candidates.push_back(candidate);
    }
  }
  return registry;
}

VariableValues evaluate_variables(const problems::ProblemInstance& instance,
                                  const algo::AlgorithmSpec& spec, double noise_level,
                                  const store::TrainedModels& trained) {
  const auto prediction = predict_candidate(instance, spec, noise_level, trained);
  if (!prediction.undefined.empty())
    throw std::runtime_error("evaluate_variables: " +
                             std::string(to_string(prediction.undefined.front())) +
                             " undefined (non-positive quality or runtime)");
  return prediction.values;
}

Selection select(const problems::ProblemInstance& instance, const RequirementScope& scope,
                 const CandidateRegistry& registry, const store::TrainedModels& trained) {
  if (registry.candidates.empty()) throw std::invalid_argument("select: empty registry");
  if (!scope.objective) throw std::invalid_argument("select: scope has no objective");

  std::optional<Selection> best;
  double best_value = 0.0;
  for (const auto& candidate : registry.candidates) {
    const auto prediction =
        predict_candidate(instance, candidate.spec, candidate.noise_level, trained);

    // Undefined ratio variables count as constraint violations rather than
    // infinities, so they simply disqualify the candidate.
    if (references_undefined(scope.objective->expr, prediction.undefined)) continue;
    bool feasible = true;
    for (const auto& constraint : scope.constraints) {
      if (references_undefined(constraint.expr, prediction.undefined) ||
          !constraint.satisfied(prediction.values)) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;

    const double raw = scope.objective->expr.eval(prediction.values);
    const double value = scope.objective->direction == Direction::Maximize ? raw : -raw;
    if (!best) {
      best = Selection{candidate, prediction.values};
      best_value = value;
      continue;
    }
    const double tie_eps = 1e-12 * std::max(1.0, std::abs(best_value));
    if (value > best_value + tie_eps) {
      best = Selection{candidate, prediction.values};
      best_value = value;
    } else if (value > best_value - tie_eps) {
      // Tie: lower predicted runtime, then fewer layers, then variant order.
      const double t_new = prediction.values.at(Variable::Runtime);
      const double t_old = best->predicted.at(Variable::Runtime);
      const auto rank_new = std::make_tuple(t_new, candidate.spec.layers,
                                            static_cast<int>(candidate.spec.variant));
      const auto rank_old = std::make_tuple(t_old, best->chosen.spec.layers,
                                            static_cast<int>(best->chosen.spec.variant));
      if (rank_new < rank_old) best = Selection{candidate, prediction.values};
    }
  }
  if (!best) throw InfeasibleError("select: no candidate satisfies the constraints");
  return *best;
}

algo::Outcome solve(const problems::ProblemInstance& instance, const RequirementScope& scope,
                    const CandidateRegistry& registry, store::TrainedModels& trained,
                    store::ResultStore& results, const SolveOptions& options) {
  const Selection selection = select(instance, scope, registry, trained);

  algo::Backend backend = algo::Backend::make_ideal();
  if (selection.chosen.noise_level > 0.0) {
    sim::NoiseParams params = options.noise;
    params.level = selection.chosen.noise_level;
    backend = algo::Backend::make_noisy(params);
  }

  algo::Outcome outcome;
  try {
    outcome = algo::run_algorithm(selection.chosen.spec, instance, backend, options.seed);
  } catch (const std::exception& e) {
    results.record_failure(store::instance_id_of(instance), e.what());
    throw;
  }
  results.append(store::make_record(instance, outcome));

  if (!options.models_dir.empty()) {
    store::TrainedModels refreshed;
    if (store::maybe_retrain(results, options.models_dir, options.retrain_threshold, &refreshed))
      trained = std::move(refreshed);
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  LinearExpr parse_sum() {
    LinearExpr expr;
    skip_space();
    bool first = true;
    while (true) {
      skip_space();
      double sign = 1.0;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        sign = text_[pos_] == '-' ? -1.0 : 1.0;
        ++pos_;
      } else if (!first && pos_ < text_.size()) {
        fail("expected '+' or '-'");
      }
      skip_space();
      parse_term(expr, sign);
      first = false;
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] == '<' || text_[pos_] == '>') break;
    }
    return expr;
  }

  Constraint parse_constraint() {
    Constraint constraint;
    constraint.expr = parse_sum();
    skip_space();
    if (pos_ + 1 >= text_.size() || (text_[pos_] != '<' && text_[pos_] != '>') ||
        text_[pos_ + 1] != '=')
      fail("expected '<=' or '>='");
    constraint.relation = text_[pos_] == '<' ? Relation::LessEqual : Relation::GreaterEqual;
    pos_ += 2;
    skip_space();
    constraint.bound = parse_number();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return constraint;
  }

  void expect_end() {
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
  }

 private:
  [[noreturn]] void fail(const std::string& message) {
    throw ExprParseError(message + " at column " + std::to_string(pos_ + 1), pos_ + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  double parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    if (pos_ == start) fail("expected a number");
    try {
      return std::stod(std::string(text_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number");
    }
  }

  void parse_term(LinearExpr& expr, double sign) {
    if (pos_ >= text_.size()) fail("expected a term");
    double coeff = 1.0;
    bool have_number = false;
    if (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.') {
      coeff = parse_number();
      have_number = true;
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '*') {
        ++pos_;
        skip_space();
      } else {
        expr.constant += sign * coeff;  // bare numeric constant
        return;
      }
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) {
      if (have_number) fail("expected a variable after '*'");
      fail("expected a variable or number");
    }
    const auto name = text_.substr(start, pos_ - start);
    const auto variable = variable_from_string(name);
    if (!variable) {
      pos_ = start;
      fail("unknown variable '" + std::string(name) + "'");
    }
    expr.terms[*variable] += sign * coeff;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

LinearExpr parse_expr(std::string_view text) {
  ExprParser parser(text);
  LinearExpr expr = parser.parse_sum();
  parser.expect_end();
  return expr;
}

Constraint parse_constraint(std::string_view text) {
  ExprParser parser(text);
  return parser.parse_constraint();
}

Objective parse_objective(std::string_view text) {
  Objective objective;
  auto trimmed = text;
  const auto strip = [&](std::string_view prefix) {
    if (trimmed.substr(0, prefix.size()) == prefix) {
      trimmed.remove_prefix(prefix.size());
      return true;
    }
    return false;
  };
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.remove_prefix(1);
  if (strip("maximize:")) {
    objective.direction = Direction::Maximize;
  } else if (strip("minimize:")) {
    objective.direction = Direction::Minimize;
  }
  objective.expr = parse_expr(trimmed);
  return objective;
}

}  // namespace qdaw::sel
