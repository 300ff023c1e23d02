#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "qdaw/models.hpp"
#include "qdaw/problems.hpp"
#include "qdaw/qaoa.hpp"

namespace qdaw::store {

std::string utc_timestamp_now();

/// Hex-encoded FNV-1a hash of the canonical instance JSON; the stable
/// deduplication key across benchmark runs.
std::string instance_id_of(const problems::ProblemInstance& instance);

struct ResultRecord {
  std::string instance_id;
  problems::ProblemKind problem = problems::ProblemKind::MaxCut;
  int n_qubits = 0;
  std::uint64_t instance_seed = 0;
  algo::Variant variant = algo::Variant::QAOA;
  int layers = 1;
  double noise_level = 0.0;
  int shots = 0;
  double quality = 0.0;
  double normalized_y = 0.0;
  double lb = 0.0, ub = 0.0;
  double runtime_seconds = 0.0;
  double quantum_seconds = 0.0;
  double classical_seconds = 0.0;
  int d_cx = 0, n_cx = 0;
  int optimizer_iters = 0;
  std::uint64_t run_seed = 0;
  std::string timestamp;

  nlohmann::ordered_json to_json() const;
  static ResultRecord from_json(const nlohmann::json& j);
  void validate() const;

  models::Observation observation() const;
};

ResultRecord make_record(const problems::ProblemInstance& instance, const algo::Outcome& outcome);

struct RecordFilter {
  std::optional<problems::ProblemKind> problem;
  std::optional<algo::Variant> variant;
  std::optional<int> layers;
  std::optional<double> noise_level;
  std::optional<int> n_qubits;
  std::optional<std::string> instance_id;

  bool matches(const ResultRecord& r) const;
};

/// Append-only JSON-Lines store with a single writer (advisory lock taken on
/// first append) and any number of readers. Corrupt lines are skipped with a
/// warning and counted.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path path);
  ~ResultStore();
  ResultStore(const ResultStore&) = delete;
  ResultStore& operator=(const ResultStore&) = delete;

  void append(const ResultRecord& record);
  std::vector<ResultRecord> load(int* corrupt_lines = nullptr) const;
  std::vector<ResultRecord> query(const RecordFilter& filter, int* corrupt_lines = nullptr) const;
  std::size_t count() const;

  /// Failures are appended to a sidecar "<store>.failures" file.
  void record_failure(const std::string& instance_id, const std::string& message);

  const std::filesystem::path& path() const { return path_; }

 private:
  void open_writer();

  std::filesystem::path path_;
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Benchmark sweeps

struct BenchPlan {
  std::vector<problems::ProblemKind> problems;
  std::vector<int> sizes;
  int instances_per_size = 10;
  std::vector<algo::Variant> variants;
  int min_layers = 1;
  int max_layers = 1;
  std::vector<double> noise_levels = {0.0};
  std::uint64_t seed = 1;
  int shots = 10000;
  algo::OptimizerSettings optimizer;
  double ws_epsilon = 0.25;
  int rqaoa_cutoff = 5;
  int workers = 1;
  sim::NoiseParams noise;  // per-level sweeps override noise.level

  static BenchPlan from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

/// Deterministic instance for a plan slot.
problems::ProblemInstance plan_instance(const BenchPlan& plan, problems::ProblemKind kind,
                                        int size, int index);

struct BenchStats {
  int total = 0;
  int executed = 0;
  int skipped = 0;  // already present in the store
  int failed = 0;
};

/// Cartesian sweep over the plan, resumable: (instance, variant, layers,
/// level) tuples already in the store are skipped. Worker threads execute
/// runs; records are committed in deterministic plan order.
BenchStats run_benchmark(const BenchPlan& plan, ResultStore& store,
                         std::ostream* progress = nullptr);

// ---------------------------------------------------------------------------
// Training and persistence

struct SplitPolicy {
  std::set<int> baseline_sizes;
  std::set<int> extrapolation_sizes;
  double holdout_fraction = 0.2;
  std::uint64_t salt = 0x5eedULL;

  void validate() const;
  static SplitPolicy from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

using ScopeKey = std::tuple<algo::Variant, problems::ProblemKind, double>;
std::string scope_name(const ScopeKey& key);

struct TrainedModels {
  std::map<std::pair<algo::Variant, problems::ProblemKind>, models::ModelBundle> bundles;

  const models::ModelBundle* find(algo::Variant variant, problems::ProblemKind problem) const;
};

struct TrainReport {
  struct ScopeRow {
    ScopeKey scope;
    int train_records = 0;
    std::string chosen;
    std::map<std::string, models::EvalEntry> entries;
  };
  std::vector<ScopeRow> rows;
  std::vector<std::string> skipped;
  models::ClampCounter clamps;
  int training_records = 0;
  int holdout_records = 0;
  int extrapolation_records = 0;
};

/// Splits records per the policy, fits the per-scope quality and runtime
/// models plus one degradation model per (variant, problem), selects the
/// quality model with the lowest holdout RMSE, and reports errors on both
/// test partitions. Under-populated scopes are skipped and listed.
TrainReport train(const std::vector<ResultRecord>& records, const SplitPolicy& policy,
                  TrainedModels& out);

/// One JSON file per (variant, problem, level); the ideal-level file also
/// carries the degradation section and fit metadata.
void save_models(const TrainedModels& trained, const TrainReport& report,
                 const SplitPolicy& policy, const std::filesystem::path& dir);
TrainedModels load_models(const std::filesystem::path& dir);

/// Refits and saves when any scope accumulated at least `threshold` records
/// beyond what its stored models were trained on. Returns true if retrained.
bool maybe_retrain(ResultStore& store, const std::filesystem::path& models_dir, int threshold,
                   TrainedModels* reloaded = nullptr);

/// Summary CSV: one row per (problem, variant, layers, n, l) group with mean
/// quality/runtime plus the owning scope's RMSE columns.
void write_report_csv(const std::vector<ResultRecord>& records, const TrainReport& report,
                      std::ostream& os);

}  // namespace qdaw::store
