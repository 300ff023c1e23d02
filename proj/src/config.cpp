#include "qdaw/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace qdaw::cli {

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                    const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* name : allowed)
      if (key == name) known = true;
    if (!known) throw std::runtime_error("config: unknown key '" + key + "' in " + context);
  }
}

}  // namespace

algo::AlgorithmSpec Config::base_spec() const {
  algo::AlgorithmSpec spec;
  spec.shots = shots;
  spec.optimizer = optimizer;
  spec.ws_epsilon = ws_epsilon;
  spec.rqaoa_cutoff = rqaoa_cutoff;
  return spec;
}

Config Config::from_json(const nlohmann::json& j) {
  Config config;
  reject_unknown(j,
                 {"store", "shots", "optimizer", "ws_epsilon", "rqaoa_cutoff", "noise",
                  "registry", "workers", "seed", "retrain_threshold"},
                 "top level");
  if (j.contains("store")) {
    reject_unknown(j["store"], {"results", "models_dir"}, "store");
    config.results_path = j["store"].value("results", config.results_path.string());
    config.models_dir = j["store"].value("models_dir", config.models_dir.string());
  }
  config.shots = j.value("shots", config.shots);
  if (j.contains("optimizer")) {
    reject_unknown(j["optimizer"], {"tolerance", "max_iters", "initial_step"}, "optimizer");
    config.optimizer.tolerance = j["optimizer"].value("tolerance", config.optimizer.tolerance);
    config.optimizer.max_iters = j["optimizer"].value("max_iters", config.optimizer.max_iters);
    config.optimizer.initial_step =
        j["optimizer"].value("initial_step", config.optimizer.initial_step);
  }
  config.ws_epsilon = j.value("ws_epsilon", config.ws_epsilon);
  config.rqaoa_cutoff = j.value("rqaoa_cutoff", config.rqaoa_cutoff);
  if (j.contains("noise")) {
    reject_unknown(j["noise"],
                   {"p1", "p2", "t_1q", "t_2q", "T1", "T2", "t_meas", "relax_on_measure"},
                   "noise");
    const auto& n = j["noise"];
    config.noise.p1 = n.value("p1", config.noise.p1);
    config.noise.p2 = n.value("p2", config.noise.p2);
    config.noise.t_1q = n.value("t_1q", config.noise.t_1q);
    config.noise.t_2q = n.value("t_2q", config.noise.t_2q);
    config.noise.t1 = n.value("T1", config.noise.t1);
    config.noise.t2 = n.value("T2", config.noise.t2);
    config.noise.t_meas = n.value("t_meas", config.noise.t_meas);
    config.noise.relax_on_measure = n.value("relax_on_measure", config.noise.relax_on_measure);
    config.noise.validate();
  }
  if (j.contains("registry")) {
    reject_unknown(j["registry"], {"variants", "max_layers", "noise_level"}, "registry");
    if (j["registry"].contains("variants")) {
      config.registry.variants.clear();
      for (const auto& v : j["registry"]["variants"]) {
        const auto variant = algo::variant_from_string(v.get<std::string>());
        if (!variant)
          throw std::runtime_error("config: unknown variant '" + v.get<std::string>() + "'");
        config.registry.variants.push_back(*variant);
      }
    }
    config.registry.max_layers = j["registry"].value("max_layers", config.registry.max_layers);
    config.registry.noise_level =
        j["registry"].value("noise_level", config.registry.noise_level);
  }
  config.workers = j.value("workers", config.workers);
  config.seed = j.value("seed", config.seed);
  config.retrain_threshold = j.value("retrain_threshold", config.retrain_threshold);
  return config;
}

Config Config::load(const std::optional<std::filesystem::path>& path) {
  std::filesystem::path effective;
  if (path) {
    effective = *path;
  } else if (const char* env = std::getenv("QDAW_CONFIG")) {
    effective = env;
  } else {
    return Config{};
  }
  std::ifstream in(effective);
  if (!in) throw std::runtime_error("config: cannot read " + effective.string());
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

}  // namespace qdaw::cli
