#include "qdaw/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "qdaw/config.hpp"
#include "qdaw/rng.hpp"
#include "qdaw/selection.hpp"
#include "qdaw/store.hpp"

namespace qdaw::cli {

namespace {

constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUntrained = 3;

problems::ProblemInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read instance file " + path.string());
  nlohmann::json j;
  in >> j;
  return problems::instance_from_json(j);
}

sel::RequirementScope scope_from_flags(const std::string& objective,
                                       const std::vector<std::string>& constraints) {
  sel::RequirementScope scope;
  if (!objective.empty()) scope.objective = sel::parse_objective(objective);
  for (const auto& text : constraints) scope.constraints.push_back(sel::parse_constraint(text));
  return scope;
}

nlohmann::ordered_json selection_to_json(const sel::Selection& selection) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(algo::to_string(selection.chosen.spec.variant));
  j["layers"] = selection.chosen.spec.layers;
  j["noise_level"] = selection.chosen.noise_level;
  nlohmann::ordered_json predicted;
  for (const auto& [variable, value] : selection.predicted)
    predicted[std::string(sel::to_string(variable))] = value;
  j["predicted"] = std::move(predicted);
  return j;
}

struct CommonFlags {
  std::string config_path;
  Config config;

  void load() {
    config = config_path.empty() ? Config::load(std::nullopt)
                                 : Config::load(std::filesystem::path(config_path));
  }
};

int run_gen(const std::string& problem, int n, int count, std::uint64_t seed,
            const std::string& out_dir) {
  const auto kind = problems::problem_kind_from_string(problem);
  if (!kind) throw std::runtime_error("unknown problem '" + problem + "'");
  std::filesystem::create_directories(out_dir);
  for (int index = 0; index < count; ++index) {
    const auto instance = problems::generate_instance(*kind, n, mix64(seed, index));
    std::ostringstream name;
    name << problem << "_n" << n << "_" << index << ".json";
    const auto path = std::filesystem::path(out_dir) / name.str();
    std::ofstream out(path);
    out << problems::canonical_json(instance) << "\n";
    std::cout << path.string() << "\n";
  }
  return 0;
}

int run_bench(CommonFlags& common, const std::string& plan_path, const std::string& store_path,
              int workers_override) {
  std::ifstream in(plan_path);
  if (!in) throw std::runtime_error("cannot read plan file " + plan_path);
  nlohmann::json j;
  in >> j;
  auto plan = store::BenchPlan::from_json(j);
  plan.noise = common.config.noise;
  if (workers_override > 0) plan.workers = workers_override;
  store::ResultStore results(store_path.empty() ? common.config.results_path : std::filesystem::path(store_path));
  const auto stats = store::run_benchmark(plan, results, &std::cerr);
  nlohmann::ordered_json out;
  out["total"] = stats.total;
  out["executed"] = stats.executed;
  out["skipped"] = stats.skipped;
  out["failed"] = stats.failed;
  std::cout << out.dump() << "\n";
  return stats.failed == 0 ? 0 : kExitError;
}

store::SplitPolicy split_from_flags(const std::vector<int>& baseline,
                                    const std::vector<int>& extrapolation, double holdout) {
  store::SplitPolicy policy;
  policy.baseline_sizes.insert(baseline.begin(), baseline.end());
  policy.extrapolation_sizes.insert(extrapolation.begin(), extrapolation.end());
  policy.holdout_fraction = holdout;
  policy.validate();
  return policy;
}

int run_train(CommonFlags& common, const std::string& store_path,
              const std::vector<int>& baseline, const std::vector<int>& extrapolation,
              double holdout, const std::string& models_dir, const std::string& report_path) {
  const auto policy = split_from_flags(baseline, extrapolation, holdout);
  store::ResultStore results(store_path.empty() ? common.config.results_path : std::filesystem::path(store_path));
  const auto records = results.load();
  store::TrainedModels trained;
  const auto report = store::train(records, policy, trained);
  store::save_models(trained, report, policy,
                     models_dir.empty() ? common.config.models_dir : std::filesystem::path(models_dir));
  for (const auto& note : report.skipped) std::cerr << "train: skipped " << note << "\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    store::write_report_csv(records, report, out);
  }
  nlohmann::ordered_json out;
  out["scopes"] = report.rows.size();
  out["skipped"] = report.skipped.size();
  out["training_records"] = report.training_records;
  out["holdout_records"] = report.holdout_records;
  out["extrapolation_records"] = report.extrapolation_records;
  std::cout << out.dump() << "\n";
  return 0;
}

int run_eval(CommonFlags& common, const std::string& store_path,
             const std::vector<int>& baseline, const std::vector<int>& extrapolation,
             double holdout, const std::string& report_path) {
  const auto policy = split_from_flags(baseline, extrapolation, holdout);
  store::ResultStore results(store_path.empty() ? common.config.results_path : std::filesystem::path(store_path));
  const auto records = results.load();
  store::TrainedModels trained;
  const auto report = store::train(records, policy, trained);
  std::ofstream out(report_path);
  if (!out) throw std::runtime_error("cannot write report " + report_path);
  store::write_report_csv(records, report, out);
  std::cout << "wrote " << report_path << "\n";
  return 0;
}

int run_select_or_solve(CommonFlags& common, bool execute, const std::string& instance_path,
                        const std::string& objective, const std::vector<std::string>& constraints,
                        const std::string& store_path, const std::string& models_dir,
                        double level, std::uint64_t seed) {
  const auto instance = read_instance(instance_path);
  auto scope = scope_from_flags(objective, constraints);
  if (!scope.objective)
    throw std::runtime_error("an --objective expression is required");
  const auto dir = models_dir.empty() ? common.config.models_dir : std::filesystem::path(models_dir);
  auto trained = store::load_models(dir);
  const auto registry = sel::CandidateRegistry::grid(
      common.config.registry.variants, common.config.registry.max_layers,
      level >= 0.0 ? level : common.config.registry.noise_level, common.config.base_spec());

  if (!execute) {
    const auto selection = sel::select(instance, scope, registry, trained);
    std::cout << selection_to_json(selection).dump() << "\n";
    return 0;
  }

  store::ResultStore results(store_path.empty() ? common.config.results_path : std::filesystem::path(store_path));
  sel::SolveOptions options;
  options.noise = common.config.noise;
  options.models_dir = dir;
  options.retrain_threshold = common.config.retrain_threshold;
  options.seed = seed;
  const auto outcome = sel::solve(instance, scope, registry, trained, results, options);
  std::cout << store::make_record(instance, outcome).to_json().dump() << "\n";
  return 0;
}

int run_report(CommonFlags& common, const std::string& store_path,
               const std::string& out_path) {
  store::ResultStore results(store_path.empty() ? common.config.results_path : std::filesystem::path(store_path));
  const auto records = results.load();
  store::TrainReport empty;
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write report " + out_path);
  store::write_report_csv(records, empty, out);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"qdaw: benchmark hybrid quantum optimisation algorithms, fit quality and "
               "runtime models, and select algorithms under linear requirements",
               "qdaw"};
  app.require_subcommand(1);
  CommonFlags common;
  app.add_option("--config", common.config_path, "Configuration file (or $QDAW_CONFIG)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate problem instances as JSON files");
  std::string gen_problem;
  int gen_n = 0, gen_count = 1;
  std::uint64_t gen_seed = 1;
  std::string gen_out = ".";
  gen->add_option("--problem", gen_problem, "maxcut|mvc|mis|partition|max3sat")->required();
  gen->add_option("--n", gen_n, "Number of qubits")->required();
  gen->add_option("--count", gen_count, "Number of instances");
  gen->add_option("--seed", gen_seed, "Base seed");
  gen->add_option("--out", gen_out, "Output directory");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a benchmark plan (resumable)");
  std::string bench_plan, bench_store;
  int bench_workers = 0;
  bench->add_option("--plan", bench_plan, "Plan JSON file")->required();
  bench->add_option("--store", bench_store, "Results file (JSON lines)");
  bench->add_option("--workers", bench_workers, "Worker threads (overrides the plan)");

  // train
  auto* train = app.add_subcommand("train", "Fit quality and runtime models from a store");
  std::string train_store, train_models, train_report;
  std::vector<int> train_baseline, train_extrapolation;
  double train_holdout = 0.2;
  train->add_option("--store", train_store, "Results file");
  train->add_option("--baseline", train_baseline, "Baseline qubit counts")
      ->required()
      ->delimiter(',');
  train->add_option("--extrapolation", train_extrapolation, "Extrapolation qubit counts")
      ->delimiter(',');
  train->add_option("--holdout", train_holdout, "Holdout fraction within the baseline sizes");
  train->add_option("--models", train_models, "Models output directory");
  train->add_option("--report", train_report, "Also write the evaluation CSV here");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate models on a store and write a CSV report");
  std::string eval_store, eval_report;
  std::vector<int> eval_baseline, eval_extrapolation;
  double eval_holdout = 0.2;
  eval->add_option("--store", eval_store, "Results file");
  eval->add_option("--baseline", eval_baseline, "Baseline qubit counts")
      ->required()
      ->delimiter(',');
  eval->add_option("--extrapolation", eval_extrapolation, "Extrapolation qubit counts")
      ->delimiter(',');
  eval->add_option("--holdout", eval_holdout, "Holdout fraction within the baseline sizes");
  eval->add_option("--report", eval_report, "Output CSV path")->required();

  // select
  auto* select = app.add_subcommand("select", "Pick the best algorithm for an instance");
  std::string sel_instance, sel_objective, sel_models;
  std::vector<std::string> sel_constraints;
  double sel_level = -1.0;
  select->add_option("--instance", sel_instance, "Instance JSON file")->required();
  select->add_option("--objective", sel_objective,
                     "e.g. \"maximize: SOLUTION_QUALITY\" or \"minimize: RUNTIME\"")
      ->required();
  select->add_option("--constraint", sel_constraints,
                     "e.g. \"RUNTIME <= 10\" (repeatable)");
  select->add_option("--models", sel_models, "Models directory");
  select->add_option("--level", sel_level, "Registry noise level (overrides config)");

  // solve
  auto* solve = app.add_subcommand("solve", "Select, execute and record the outcome");
  std::string solve_instance, solve_objective, solve_models, solve_store;
  std::vector<std::string> solve_constraints;
  double solve_level = -1.0;
  std::uint64_t solve_seed = 1;
  solve->add_option("--instance", solve_instance, "Instance JSON file")->required();
  solve->add_option("--objective", solve_objective, "Objective expression")->required();
  solve->add_option("--constraint", solve_constraints, "Constraint expression (repeatable)");
  solve->add_option("--models", solve_models, "Models directory");
  solve->add_option("--store", solve_store, "Results file");
  solve->add_option("--level", solve_level, "Registry noise level (overrides config)");
  solve->add_option("--seed", solve_seed, "Run seed");

  // report
  auto* report = app.add_subcommand("report", "Write a CSV summary of a results store");
  std::string report_store, report_out;
  report->add_option("--store", report_store, "Results file");
  report->add_option("--out", report_out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    common.load();
    if (gen->parsed()) return run_gen(gen_problem, gen_n, gen_count, gen_seed, gen_out);
    if (bench->parsed()) return run_bench(common, bench_plan, bench_store, bench_workers);
    if (train->parsed())
      return run_train(common, train_store, train_baseline, train_extrapolation, train_holdout,
                       train_models, train_report);
    if (eval->parsed())
      return run_eval(common, eval_store, eval_baseline, eval_extrapolation, eval_holdout,
                      eval_report);
    if (select->parsed())
      return run_select_or_solve(common, false, sel_instance, sel_objective, sel_constraints,
                                 "", sel_models, sel_level, 0);
    if (solve->parsed())
      return run_select_or_solve(common, true, solve_instance, solve_objective,
                                 solve_constraints, solve_store, solve_models, solve_level,
                                 solve_seed);
    if (report->parsed()) return run_report(common, report_store, report_out);
  } catch (const sel::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const models::UntrainedModelError& e) {
    std::cerr << "untrained model: " << e.what() << "\n";
    return kExitUntrained;
  } catch (const sel::ExprParseError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace qdaw::cli
