#include "qdaw/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "qdaw/rng.hpp"

namespace qdaw::store {

namespace {

std::string format_level(double level) {
  if (level == std::floor(level) && std::abs(level) < 1e9)
    return std::to_string(static_cast<long long>(level));
  std::ostringstream os;
  os << level;
  return os.str();
}

std::string run_key(const std::string& instance_id, algo::Variant variant, int layers,
                    double level) {
  return instance_id + "|" + std::string(algo::to_string(variant)) + "|" +
         std::to_string(layers) + "|" + format_level(level);
}

}  // namespace

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::string instance_id_of(const problems::ProblemInstance& instance) {
  const std::uint64_t hash = fnv1a64(problems::canonical_json(instance));
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

nlohmann::ordered_json ResultRecord::to_json() const {
  nlohmann::ordered_json j;
  j["instance_id"] = instance_id;
  j["problem"] = std::string(problems::to_string(problem));
  j["n_qubits"] = n_qubits;
  j["instance_seed"] = instance_seed;
  j["variant"] = std::string(algo::to_string(variant));
  j["layers"] = layers;
  j["noise_level"] = noise_level;
  j["shots"] = shots;
  j["quality"] = quality;
  j["normalized_y"] = normalized_y;
  j["lb"] = lb;
  j["ub"] = ub;
  j["runtime_seconds"] = runtime_seconds;
  j["quantum_seconds"] = quantum_seconds;
  j["classical_seconds"] = classical_seconds;
  j["d_cx"] = d_cx;
  j["n_cx"] = n_cx;
  j["optimizer_iters"] = optimizer_iters;
  j["run_seed"] = run_seed;
  j["timestamp"] = timestamp;
  return j;
}

ResultRecord ResultRecord::from_json(const nlohmann::json& j) {
  ResultRecord r;
  r.instance_id = j.at("instance_id").get<std::string>();
  const auto problem = problems::problem_kind_from_string(j.at("problem").get<std::string>());
  const auto variant = algo::variant_from_string(j.at("variant").get<std::string>());
  if (!problem || !variant) throw std::runtime_error("record: unknown problem or variant");
  r.problem = *problem;
  r.variant = *variant;
  r.n_qubits = j.at("n_qubits").get<int>();
  r.instance_seed = j.at("instance_seed").get<std::uint64_t>();
  r.layers = j.at("layers").get<int>();
  r.noise_level = j.at("noise_level").get<double>();
  r.shots = j.at("shots").get<int>();
  r.quality = j.at("quality").get<double>();
  r.normalized_y = j.at("normalized_y").get<double>();
  r.lb = j.at("lb").get<double>();
  r.ub = j.at("ub").get<double>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  r.quantum_seconds = j.at("quantum_seconds").get<double>();
  r.classical_seconds = j.at("classical_seconds").get<double>();
  r.d_cx = j.at("d_cx").get<int>();
  r.n_cx = j.at("n_cx").get<int>();
  r.optimizer_iters = j.at("optimizer_iters").get<int>();
  r.run_seed = j.at("run_seed").get<std::uint64_t>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.validate();
  return r;
}

void ResultRecord::validate() const {
  const double fields[] = {quality, normalized_y, lb,  ub, runtime_seconds, quantum_seconds,
                           classical_seconds, noise_level};
  for (double v : fields)
    if (!std::isfinite(v)) throw std::runtime_error("record: non-finite numeric field");
  const double expected = (quality - lb) / (ub - lb);
  if (std::abs(expected - normalized_y) > 1e-9)
    throw std::runtime_error("record: normalized_y inconsistent with quality and bounds");
}

models::Observation ResultRecord::observation() const {
  models::Observation o;
  o.instance_id = instance_id;
  o.y = normalized_y;
  o.f = quality;
  o.lb = lb;
  o.ub = ub;
  o.n = n_qubits;
  o.d = layers;
  o.d_cx = d_cx;
  o.n_cx = n_cx;
  o.l = noise_level;
  o.runtime = runtime_seconds;
  return o;
}

ResultRecord make_record(const problems::ProblemInstance& instance,
                         const algo::Outcome& outcome) {
  ResultRecord r;
  r.instance_id = instance_id_of(instance);
  r.problem = instance.kind;
  r.n_qubits = instance.n_qubits;
  r.instance_seed = instance.seed;
  r.variant = outcome.variant;
  r.layers = outcome.layers;
  r.noise_level = outcome.noise_level;
  r.shots = outcome.shots;
  r.quality = outcome.quality;
  r.normalized_y = outcome.normalized_y;
  r.lb = outcome.lb;
  r.ub = outcome.ub;
  r.runtime_seconds = outcome.runtime_seconds;
  r.quantum_seconds = outcome.quantum_seconds;
  r.classical_seconds = outcome.classical_seconds;
  r.d_cx = outcome.d_cx;
  r.n_cx = outcome.n_cx;
  r.optimizer_iters = outcome.optimizer_iters;
  r.run_seed = outcome.run_seed;
  r.timestamp = utc_timestamp_now();
  return r;
}

bool RecordFilter::matches(const ResultRecord& r) const {
  if (problem && r.problem != *problem) return false;
  if (variant && r.variant != *variant) return false;
  if (layers && r.layers != *layers) return false;
  if (noise_level && std::abs(r.noise_level - *noise_level) > 1e-9) return false;
  if (n_qubits && r.n_qubits != *n_qubits) return false;
  if (instance_id && r.instance_id != *instance_id) return false;
  return true;
}

ResultStore::ResultStore(std::filesystem::path path) : path_(std::move(path)) {}

ResultStore::~ResultStore() {
  if (fd_ >= 0) ::close(fd_);
}

void ResultStore::open_writer() {
  if (fd_ >= 0) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd_ < 0) throw std::runtime_error("store: cannot open " + path_.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw std::runtime_error("store: " + path_.string() + " is locked by another writer");
  }
}

void ResultStore::append(const ResultRecord& record) {
  record.validate();
  open_writer();
  const std::string line = record.to_json().dump() + "\n";
  if (::write(fd_, line.data(), line.size()) != static_cast<ssize_t>(line.size()))
    throw std::runtime_error("store: short write to " + path_.string());
}

std::vector<ResultRecord> ResultStore::load(int* corrupt_lines) const {
  std::vector<ResultRecord> records;
  if (corrupt_lines) *corrupt_lines = 0;
  std::ifstream in(path_);
  if (!in) return records;
  std::string line;
  int corrupt = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(ResultRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      ++corrupt;
      std::cerr << "store: skipping corrupt line (" << e.what() << ")\n";
    }
  }
  if (corrupt_lines) *corrupt_lines = corrupt;
  return records;
}

std::vector<ResultRecord> ResultStore::query(const RecordFilter& filter,
                                             int* corrupt_lines) const {
  auto records = load(corrupt_lines);
  std::erase_if(records, [&](const ResultRecord& r) { return !filter.matches(r); });
  return records;
}

std::size_t ResultStore::count() const { return load().size(); }

void ResultStore::record_failure(const std::string& instance_id, const std::string& message) {
  const auto sidecar = path_.string() + ".failures";
  std::ofstream out(sidecar, std::ios::app);
  nlohmann::ordered_json j;
  j["instance_id"] = instance_id;
  j["error"] = message;
  j["timestamp"] = utc_timestamp_now();
  out << j.dump() << "\n";
}

// ---------------------------------------------------------------------------
// Benchmark sweeps

BenchPlan BenchPlan::from_json(const nlohmann::json& j) {
  BenchPlan plan;
  for (const auto& p : j.at("problems")) {
    const auto kind = problems::problem_kind_from_string(p.get<std::string>());
    if (!kind) throw std::runtime_error("plan: unknown problem " + p.get<std::string>());
    plan.problems.push_back(*kind);
  }
  plan.sizes = j.at("sizes").get<std::vector<int>>();
  plan.instances_per_size = j.at("instances_per_size").get<int>();
  for (const auto& v : j.at("variants")) {
    const auto variant = algo::variant_from_string(v.get<std::string>());
    if (!variant) throw std::runtime_error("plan: unknown variant " + v.get<std::string>());
    plan.variants.push_back(*variant);
  }
  plan.min_layers = j.value("min_layers", 1);
  plan.max_layers = j.at("max_layers").get<int>();
  if (j.contains("noise_levels")) plan.noise_levels = j["noise_levels"].get<std::vector<double>>();
  plan.seed = j.value("seed", std::uint64_t{1});
  plan.shots = j.value("shots", 10000);
  if (j.contains("optimizer")) {
    plan.optimizer.tolerance = j["optimizer"].value("tolerance", 0.01);
    plan.optimizer.max_iters = j["optimizer"].value("max_iters", 150);
    plan.optimizer.initial_step = j["optimizer"].value("initial_step", 0.5);
  }
  plan.ws_epsilon = j.value("ws_epsilon", 0.25);
  plan.rqaoa_cutoff = j.value("rqaoa_cutoff", 5);
  plan.workers = j.value("workers", 1);
  return plan;
}

nlohmann::ordered_json BenchPlan::to_json() const {
  nlohmann::ordered_json j;
  auto names = nlohmann::ordered_json::array();
  for (auto p : problems) names.push_back(std::string(problems::to_string(p)));
  j["problems"] = std::move(names);
  j["sizes"] = sizes;
  j["instances_per_size"] = instances_per_size;
  auto vnames = nlohmann::ordered_json::array();
  for (auto v : variants) vnames.push_back(std::string(algo::to_string(v)));
  j["variants"] = std::move(vnames);
  j["min_layers"] = min_layers;
  j["max_layers"] = max_layers;
  j["noise_levels"] = noise_levels;
  j["seed"] = seed;
  j["shots"] = shots;
  j["optimizer"] = {{"tolerance", optimizer.tolerance},
                    {"max_iters", optimizer.max_iters},
                    {"initial_step", optimizer.initial_step}};
  j["ws_epsilon"] = ws_epsilon;
  j["rqaoa_cutoff"] = rqaoa_cutoff;
  j["workers"] = workers;
  return j;
}

problems::ProblemInstance plan_instance(const BenchPlan& plan, problems::ProblemKind kind,
                                        int size, int index) {
  const std::uint64_t seed = mix64(plan.seed, 0x1257ULL, static_cast<std::uint64_t>(kind),
                                   static_cast<std::uint64_t>(size),
                                   static_cast<std::uint64_t>(index));
  return problems::generate_instance(kind, size, seed);
}

namespace {

struct BenchTask {
  problems::ProblemInstance instance;
  std::string instance_id;
  algo::AlgorithmSpec spec;
  double level = 0.0;
};

ResultRecord execute_task(const BenchPlan& plan, const BenchTask& task) {
  algo::Backend backend = algo::Backend::make_ideal();
  if (task.level > 0.0) {
    sim::NoiseParams params = plan.noise;
    params.level = task.level;
    backend = algo::Backend::make_noisy(params);
  }
  const std::uint64_t run_seed =
      mix64(plan.seed, fnv1a64(task.instance_id), static_cast<std::uint64_t>(task.spec.variant),
            static_cast<std::uint64_t>(task.spec.layers),
            static_cast<std::uint64_t>(task.level * 4096.0));
  const auto outcome = algo::run_algorithm(task.spec, task.instance, backend, run_seed);
  return make_record(task.instance, outcome);
}

}  // namespace

BenchStats run_benchmark(const BenchPlan& plan, ResultStore& store, std::ostream* progress) {
  std::set<std::string> existing;
  for (const auto& r : store.load())
    existing.insert(run_key(r.instance_id, r.variant, r.layers, r.noise_level));

  // Deterministic task order: problems x sizes x instances x variants x
  // layers x levels, as listed in the plan.
  std::vector<BenchTask> tasks;
  for (const auto kind : plan.problems) {
    for (const int size : plan.sizes) {
      for (int index = 0; index < plan.instances_per_size; ++index) {
        const auto instance = plan_instance(plan, kind, size, index);
        const auto id = instance_id_of(instance);
        for (const auto variant : plan.variants) {
          for (int layers = plan.min_layers; layers <= plan.max_layers; ++layers) {
            for (const double level : plan.noise_levels) {
              BenchTask task;
              task.instance = instance;
              task.instance_id = id;
              task.spec.variant = variant;
              task.spec.layers = layers;
              task.spec.shots = plan.shots;
              task.spec.optimizer = plan.optimizer;
              task.spec.ws_epsilon = plan.ws_epsilon;
              task.spec.rqaoa_cutoff = plan.rqaoa_cutoff;
              task.level = level;
              tasks.push_back(std::move(task));
            }
          }
        }
      }
    }
  }

  BenchStats stats;
  stats.total = static_cast<int>(tasks.size());

  std::vector<int> pending;
  for (int t = 0; t < stats.total; ++t) {
    if (existing.count(run_key(tasks[t].instance_id, tasks[t].spec.variant,
                               tasks[t].spec.layers, tasks[t].level))) {
      ++stats.skipped;
    } else {
      pending.push_back(t);
    }
  }

  const int workers = std::max(1, plan.workers);
  std::mutex mutex;
  std::condition_variable done_cv;
  std::map<int, std::optional<ResultRecord>> completed;  // task index -> record (or failure)
  std::atomic<std::size_t> next{0};

  const auto work = [&]() {
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= pending.size()) return;
      const int t = pending[slot];
      std::optional<ResultRecord> record;
      try {
        record = execute_task(plan, tasks[t]);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mutex);
        store.record_failure(tasks[t].instance_id, e.what());
        if (progress)
          *progress << "bench: run failed (" << tasks[t].instance_id << "): " << e.what() << "\n";
      }
      {
        std::lock_guard<std::mutex> lock(mutex);
        completed[t] = std::move(record);
      }
      done_cv.notify_one();
    }
  };

  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);

  // Commit results in plan order so the store contents are deterministic.
  int written = 0;
  for (const int t : pending) {
    std::unique_lock<std::mutex> lock(mutex);
    done_cv.wait(lock, [&] { return completed.count(t) > 0; });
    const auto record = std::move(completed.at(t));
    completed.erase(t);
    lock.unlock();
    if (record) {
      store.append(*record);
      ++stats.executed;
    } else {
      ++stats.failed;
    }
    ++written;
    if (progress && written % 25 == 0)
      *progress << "bench: " << written << "/" << pending.size() << " runs done\n";
  }
  for (auto& thread : pool) thread.join();

  if (progress)
    *progress << "bench: total=" << stats.total << " executed=" << stats.executed
              << " skipped=" << stats.skipped << " failed=" << stats.failed << "\n";
  return stats;
}

// ---------------------------------------------------------------------------
// Training

void SplitPolicy::validate() const {
  if (baseline_sizes.empty()) throw std::runtime_error("split: baseline sizes empty");
  for (int e : extrapolation_sizes) {
    if (baseline_sizes.count(e)) throw std::runtime_error("split: size sets must be disjoint");
    if (e <= *baseline_sizes.rbegin())
      throw std::runtime_error("split: extrapolation sizes must exceed the baseline sizes");
  }
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    throw std::runtime_error("split: holdout fraction must lie in [0, 1)");
}

SplitPolicy SplitPolicy::from_json(const nlohmann::json& j) {
  SplitPolicy policy;
  for (int s : j.at("baseline_sizes")) policy.baseline_sizes.insert(s);
  for (int s : j.at("extrapolation_sizes")) policy.extrapolation_sizes.insert(s);
  policy.holdout_fraction = j.value("holdout_fraction", 0.2);
  policy.salt = j.value("salt", std::uint64_t{0x5eed});
  policy.validate();
  return policy;
}

nlohmann::ordered_json SplitPolicy::to_json() const {
  nlohmann::ordered_json j;
  j["baseline_sizes"] = std::vector<int>(baseline_sizes.begin(), baseline_sizes.end());
  j["extrapolation_sizes"] =
      std::vector<int>(extrapolation_sizes.begin(), extrapolation_sizes.end());
  j["holdout_fraction"] = holdout_fraction;
  j["salt"] = salt;
  return j;
}

std::string scope_name(const ScopeKey& key) {
  return std::string(algo::to_string(std::get<0>(key))) + "_" +
         std::string(problems::to_string(std::get<1>(key))) + "_" +
         format_level(std::get<2>(key));
}

const models::ModelBundle* TrainedModels::find(algo::Variant variant,
                                               problems::ProblemKind problem) const {
  const auto it = bundles.find({variant, problem});
  return it == bundles.end() ? nullptr : &it->second;
}

namespace {

struct SplitRecords {
  std::vector<ResultRecord> training;
  std::vector<ResultRecord> holdout;
  std::vector<ResultRecord> extrapolation;
};

SplitRecords split_records(const std::vector<ResultRecord>& records, const SplitPolicy& policy) {
  SplitRecords split;
  // Holdout instances are chosen per (problem, size) by deterministic hash
  // ranking, so training/test partitions never share an instance.
  std::map<std::pair<problems::ProblemKind, int>, std::set<std::string>> ids;
  for (const auto& r : records)
    if (policy.baseline_sizes.count(r.n_qubits)) ids[{r.problem, r.n_qubits}].insert(r.instance_id);

  std::set<std::string> holdout_ids;
  for (const auto& [group, group_ids] : ids) {
    std::vector<std::string> ranked(group_ids.begin(), group_ids.end());
    std::sort(ranked.begin(), ranked.end(), [&](const std::string& a, const std::string& b) {
      return mix64(fnv1a64(a), policy.salt) < mix64(fnv1a64(b), policy.salt);
    });
    const std::size_t keep =
        static_cast<std::size_t>(std::ceil(policy.holdout_fraction * ranked.size()));
    for (std::size_t k = 0; k < std::min(keep, ranked.size()); ++k)
      holdout_ids.insert(ranked[k]);
  }

  for (const auto& r : records) {
    if (policy.extrapolation_sizes.count(r.n_qubits)) {
      split.extrapolation.push_back(r);
    } else if (policy.baseline_sizes.count(r.n_qubits)) {
      if (holdout_ids.count(r.instance_id)) {
        split.holdout.push_back(r);
      } else {
        split.training.push_back(r);
      }
    }
  }
  return split;
}

std::vector<models::Observation> observations_of(const std::vector<ResultRecord>& records) {
  std::vector<models::Observation> obs;
  obs.reserve(records.size());
  for (const auto& r : records) obs.push_back(r.observation());
  return obs;
}

}  // namespace

TrainReport train(const std::vector<ResultRecord>& records, const SplitPolicy& policy,
                  TrainedModels& out) {
  policy.validate();
  out.bundles.clear();
  TrainReport report;

  const SplitRecords split = split_records(records, policy);
  report.training_records = static_cast<int>(split.training.size());
  report.holdout_records = static_cast<int>(split.holdout.size());
  report.extrapolation_records = static_cast<int>(split.extrapolation.size());

  std::map<ScopeKey, std::vector<ResultRecord>> train_by_scope, holdout_by_scope,
      extrapolation_by_scope;
  for (const auto& r : split.training)
    train_by_scope[{r.variant, r.problem, r.noise_level}].push_back(r);
  for (const auto& r : split.holdout)
    holdout_by_scope[{r.variant, r.problem, r.noise_level}].push_back(r);
  for (const auto& r : split.extrapolation)
    extrapolation_by_scope[{r.variant, r.problem, r.noise_level}].push_back(r);

  // Direct quality + runtime models per scope.
  for (const auto& [scope, scope_records] : train_by_scope) {
    if (scope_records.size() < 20) {
      report.skipped.push_back(scope_name(scope) + ": only " +
                               std::to_string(scope_records.size()) + " records");
      continue;
    }
    const auto [variant, problem, level] = scope;
    models::ModelBundle& bundle = out.bundles[{variant, problem}];
    try {
      models::LevelModels level_models =
          models::fit_level_models(observations_of(scope_records));
      std::vector<std::pair<double, double>> depth_time;
      for (const auto& r : scope_records)
        if (r.d_cx > 0 && r.runtime_seconds > 0.0)
          depth_time.push_back({static_cast<double>(r.d_cx), r.runtime_seconds});
      try {
        level_models.runtime = models::fit_runtime(depth_time);
      } catch (const models::FitError& e) {
        report.skipped.push_back(scope_name(scope) + " runtime: " + e.what());
      }
      bundle.levels[level] = std::move(level_models);
    } catch (const models::FitError& e) {
      report.skipped.push_back(scope_name(scope) + ": " + e.what());
    }
  }

  // Degradation model per (variant, problem): pair noisy training records
  // with the measured ideal run of the same (instance, layers); fall back to
  // predicted ideal quality when no measured partner exists.
  for (auto& [key, bundle] : out.bundles) {
    const auto [variant, problem] = key;
    std::map<std::pair<std::string, int>, double> measured_ideal;
    const auto ideal_it = train_by_scope.find({variant, problem, 0.0});
    if (ideal_it != train_by_scope.end())
      for (const auto& r : ideal_it->second) measured_ideal[{r.instance_id, r.layers}] = r.quality;

    std::vector<models::DegradationObservation> degradation_obs;
    int measured_pairs = 0;
    for (const auto& [scope, scope_records] : train_by_scope) {
      if (std::get<0>(scope) != variant || std::get<1>(scope) != problem) continue;
      if (std::get<2>(scope) <= 0.0) continue;
      for (const auto& r : scope_records) {
        models::DegradationObservation o;
        o.f_noisy = r.quality;
        o.lb = r.lb;
        o.n = r.n_qubits;
        o.d_cx = r.d_cx;
        o.n_cx = r.n_cx;
        o.l = r.noise_level;
        const auto it = measured_ideal.find({r.instance_id, r.layers});
        if (it != measured_ideal.end()) {
          o.f_ideal = it->second;
          ++measured_pairs;
        } else {
          const auto* ideal_models = bundle.find_level(0.0);
          if (!ideal_models) continue;
          const double y =
              ideal_models->predict_y(r.n_qubits, r.layers, &report.clamps);
          o.f_ideal = r.lb + y * (r.ub - r.lb);
        }
        degradation_obs.push_back(o);
      }
    }
    if (degradation_obs.size() >= 4) {
      try {
        bundle.degradation = models::fit_degradation(degradation_obs);
        bundle.degradation_mode =
            measured_pairs * 2 >= static_cast<int>(degradation_obs.size()) ? "measured_ideal"
                                                                           : "predicted_ideal";
      } catch (const models::FitError& e) {
        report.skipped.push_back(scope_name({variant, problem, 1.0}) +
                                 " degradation: " + e.what());
      }
    }
  }

  // Evaluation and model choice: lowest holdout RMSE wins.
  for (auto& [key, bundle] : out.bundles) {
    const auto [variant, problem] = key;
    for (auto& [level, level_models] : bundle.levels) {
      const ScopeKey scope{variant, problem, level};
      TrainReport::ScopeRow row;
      row.scope = scope;
      row.train_records = level_models.train_records;

      const auto evaluate_split = [&](const std::map<ScopeKey, std::vector<ResultRecord>>& part,
                                      const std::string& tag) {
        const auto it = part.find(scope);
        if (it == part.end()) return;
        const auto obs = observations_of(it->second);
        for (const auto kind : {models::QualityModelKind::Beta, models::QualityModelKind::Power}) {
          try {
            const auto entry = models::evaluate_direct(bundle, kind, obs, level, &report.clamps);
            const std::string name = std::string(models::to_string(kind)) + "_" + tag;
            row.entries[name] = entry;
            level_models.rmse[name] = entry.rmse;
          } catch (const std::exception& e) {
            report.skipped.push_back(scope_name(scope) + " eval: " + e.what());
          }
        }
        if (level > 0.0 && bundle.degradation) {
          try {
            row.entries["degradation_path_" + tag] =
                models::evaluate_degradation_path(bundle, obs, nullptr, &report.clamps);
          } catch (const std::exception& e) {
            report.skipped.push_back(scope_name(scope) + " degradation eval: " + e.what());
          }
        }
      };
      evaluate_split(holdout_by_scope, "holdout");
      evaluate_split(extrapolation_by_scope, "extrapolation");

      const auto beta_it = level_models.rmse.find("beta_holdout");
      const auto power_it = level_models.rmse.find("power_holdout");
      if (beta_it != level_models.rmse.end() && power_it != level_models.rmse.end()) {
        level_models.chosen = power_it->second < beta_it->second
                                  ? models::QualityModelKind::Power
                                  : models::QualityModelKind::Beta;
      }
      row.chosen = std::string(models::to_string(level_models.chosen));
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void save_models(const TrainedModels& trained, const TrainReport& report,
                 const SplitPolicy& policy, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "split.json");
    out << policy.to_json().dump(2) << "\n";
  }
  const std::string timestamp = utc_timestamp_now();
  for (const auto& [key, bundle] : trained.bundles) {
    const auto [variant, problem] = key;
    for (const auto& [level, level_models] : bundle.levels) {
      nlohmann::ordered_json j;
      j["scope"] = {{"variant", std::string(algo::to_string(variant))},
                    {"problem", std::string(problems::to_string(problem))},
                    {"level", level}};
      models::ModelBundle slice;
      slice.levels[level] = level_models;
      if (level == 0.0) {
        slice.degradation = bundle.degradation;
        slice.degradation_mode = bundle.degradation_mode;
      }
      j["models"] = models::bundle_to_json(slice);
      j["fit"] = {{"timestamp", timestamp},
                  {"train_records", level_models.train_records},
                  {"holdout_salt", policy.salt}};
      const auto name = scope_name({variant, problem, level}) + ".json";
      std::ofstream out(dir / name);
      out << j.dump(2) << "\n";
    }
  }
  (void)report;
}

TrainedModels load_models(const std::filesystem::path& dir) {
  TrainedModels trained;
  if (!std::filesystem::exists(dir)) return trained;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "split.json") continue;
    std::ifstream in(entry.path());
    nlohmann::json j;
    in >> j;
    if (!j.contains("scope")) continue;
    const auto variant = algo::variant_from_string(j["scope"].at("variant").get<std::string>());
    const auto problem =
        problems::problem_kind_from_string(j["scope"].at("problem").get<std::string>());
    if (!variant || !problem) continue;
    const auto slice = models::bundle_from_json(j.at("models"));
    models::ModelBundle& bundle = trained.bundles[{*variant, *problem}];
    for (const auto& [level, level_models] : slice.levels) bundle.levels[level] = level_models;
    if (slice.degradation) {
      bundle.degradation = slice.degradation;
      bundle.degradation_mode = slice.degradation_mode;
    }
  }
  return trained;
}

bool maybe_retrain(ResultStore& store, const std::filesystem::path& models_dir, int threshold,
                   TrainedModels* reloaded) {
  const auto split_path = models_dir / "split.json";
  if (!std::filesystem::exists(split_path)) return false;
  std::ifstream in(split_path);
  nlohmann::json split_json;
  in >> split_json;
  const SplitPolicy policy = SplitPolicy::from_json(split_json);

  // Stored per-scope training counts vs. current per-scope record counts.
  std::map<ScopeKey, int> trained_counts;
  for (const auto& entry : std::filesystem::directory_iterator(models_dir)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "split.json") continue;
    std::ifstream file(entry.path());
    nlohmann::json j;
    file >> j;
    if (!j.contains("scope") || !j.contains("fit")) continue;
    const auto variant = algo::variant_from_string(j["scope"].at("variant").get<std::string>());
    const auto problem =
        problems::problem_kind_from_string(j["scope"].at("problem").get<std::string>());
    if (!variant || !problem) continue;
    trained_counts[{*variant, *problem, j["scope"].at("level").get<double>()}] =
        j["fit"].value("train_records", 0);
  }

  const auto records = store.load();
  std::map<ScopeKey, int> current;
  for (const auto& r : records)
    if (policy.baseline_sizes.count(r.n_qubits))
      ++current[{r.variant, r.problem, r.noise_level}];

  bool stale = false;
  for (const auto& [scope, now] : current) {
    const auto it = trained_counts.find(scope);
    // Stored counts exclude the holdout share.
    const int before = it == trained_counts.end()
                           ? 0
                           : static_cast<int>(it->second / (1.0 - policy.holdout_fraction));
    if (now - before >= threshold) {
      stale = true;
      break;
    }
  }
  if (!stale) return false;

  TrainedModels fresh;
  const auto report = train(records, policy, fresh);
  save_models(fresh, report, policy, models_dir);
  if (reloaded) *reloaded = std::move(fresh);
  return true;
}

void write_report_csv(const std::vector<ResultRecord>& records, const TrainReport& report,
                      std::ostream& os) {
  std::map<ScopeKey, const TrainReport::ScopeRow*> rows;
  for (const auto& row : report.rows) rows[row.scope] = &row;

  struct Group {
    double y_sum = 0.0;
    double t_sum = 0.0;
    int count = 0;
  };
  std::map<std::tuple<problems::ProblemKind, algo::Variant, int, int, double>, Group> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.problem, r.variant, r.layers, r.n_qubits, r.noise_level}];
    g.y_sum += r.normalized_y;
    g.t_sum += r.runtime_seconds;
    ++g.count;
  }

  os << "problem,variant,layers,n,l,count,mean_y,mean_T,rmse_beta_holdout,"
        "rmse_beta_extrapolation,rmse_power_holdout,rmse_power_extrapolation,"
        "rmse_degradation_holdout,rmse_degradation_extrapolation\n";
  const auto entry_or_empty = [&](const TrainReport::ScopeRow* row, const std::string& key) {
    if (!row) return std::string();
    const auto it = row->entries.find(key);
    if (it == row->entries.end()) return std::string();
    std::ostringstream v;
    v << it->second.rmse;
    return v.str();
  };
  for (const auto& [key, g] : groups) {
    const auto [problem, variant, layers, n, level] = key;
    const auto row_it = rows.find({variant, problem, level});
    const TrainReport::ScopeRow* row = row_it == rows.end() ? nullptr : row_it->second;
    os << problems::to_string(problem) << ',' << algo::to_string(variant) << ',' << layers << ','
       << n << ',' << format_level(level) << ',' << g.count << ',' << g.y_sum / g.count << ','
       << g.t_sum / g.count << ',' << entry_or_empty(row, "beta_holdout") << ','
       << entry_or_empty(row, "beta_extrapolation") << ','
       << entry_or_empty(row, "power_holdout") << ','
       << entry_or_empty(row, "power_extrapolation") << ','
       << entry_or_empty(row, "degradation_path_holdout") << ','
       << entry_or_empty(row, "degradation_path_extrapolation") << "\n";
  }
}

}  // namespace qdaw::store
