#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"

#include "qdaw/qaoa.hpp"

namespace qdaw::cli {

/// Workbench configuration; loaded from a JSON file (QDAW_CONFIG overrides
/// the path). Unknown keys are rejected.
struct Config {
  std::filesystem::path results_path = "results.jsonl";
  std::filesystem::path models_dir = "models";

  int shots = 10000;
  algo::OptimizerSettings optimizer;
  double ws_epsilon = 0.25;
  int rqaoa_cutoff = 5;

  sim::NoiseParams noise;

  struct Registry {
    std::vector<algo::Variant> variants = {algo::Variant::QAOA, algo::Variant::WSQAOA,
                                           algo::Variant::WSInitQAOA, algo::Variant::RQAOA};
    int max_layers = 3;
    double noise_level = 0.0;
  } registry;

  int workers = 1;
  std::uint64_t seed = 1;
  int retrain_threshold = 50;

  algo::AlgorithmSpec base_spec() const;

  static Config from_json(const nlohmann::json& j);

  /// Loads `path` if given, else $QDAW_CONFIG, else returns the defaults.
  static Config load(const std::optional<std::filesystem::path>& path);
};

}  // namespace qdaw::cli
