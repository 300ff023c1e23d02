#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_binary() {
  const char* path = std::getenv("QDAW_CLI");
  REQUIRE_MESSAGE(path != nullptr, "QDAW_CLI must point at the qdaw binary");
  return path;
}

std::string source_dir() {
  const char* path = std::getenv("QDAW_SOURCE_DIR");
  REQUIRE_MESSAGE(path != nullptr, "QDAW_SOURCE_DIR must point at the repository root");
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const fs::path& cwd) {
  const auto out_file = cwd / "cli_output.txt";
  const std::string command = "cd '" + cwd.string() + "' && '" + cli_binary() + "' " + args +
                              " > cli_output.txt 2>&1";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qdaw_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("cli: --help matches the golden file") {
  TempDir dir;
  const auto result = run_cli("--help", dir.path);
  CHECK(result.exit_code == 0);
  const auto golden = read_file(fs::path(source_dir()) / "tests" / "golden" / "help.txt");
  CHECK(result.output == golden);
}

TEST_CASE("cli: gen is byte-identical across invocations") {
  TempDir dir;
  auto first = run_cli("gen --problem maxcut --n 6 --count 2 --seed 7 --out a", dir.path);
  CHECK(first.exit_code == 0);
  auto second = run_cli("gen --problem maxcut --n 6 --count 2 --seed 7 --out b", dir.path);
  CHECK(second.exit_code == 0);
  for (const char* name : {"maxcut_n6_0.json", "maxcut_n6_1.json"}) {
    CHECK(read_file(dir.path / "a" / name) == read_file(dir.path / "b" / name));
    CHECK(!read_file(dir.path / "a" / name).empty());
  }
  // The emitted instance parses and respects the schema basics.
  const auto j = nlohmann::json::parse(read_file(dir.path / "a" / "maxcut_n6_0.json"));
  CHECK(j.at("kind") == "maxcut");
  CHECK(j.at("n_qubits") == 6);
  CHECK(j.contains("edges"));
}

TEST_CASE("cli: bench + train + select + solve round trip") {
  TempDir dir;
  {
    std::ofstream plan(dir.path / "plan.json");
    plan << R"({"problems": ["maxcut"], "sizes": [4, 5, 6], "instances_per_size": 8,
                "variants": ["qaoa"], "max_layers": 2, "seed": 5, "shots": 400,
                "optimizer": {"max_iters": 25}})";
  }
  {
    std::ofstream config(dir.path / "config.json");
    config << R"({"registry": {"variants": ["qaoa"], "max_layers": 2},
                  "store": {"results": "results.jsonl", "models_dir": "models"},
                  "shots": 400, "optimizer": {"max_iters": 25}})";
  }

  auto bench = run_cli("bench --plan plan.json --store results.jsonl", dir.path);
  CHECK(bench.exit_code == 0);
  CHECK(fs::exists(dir.path / "results.jsonl"));

  auto resume = run_cli("bench --plan plan.json --store results.jsonl", dir.path);
  CHECK(resume.exit_code == 0);
  CHECK(resume.output.find("\"executed\":0") != std::string::npos);

  auto train = run_cli(
      "train --store results.jsonl --baseline 4,5 --extrapolation 6 --models models "
      "--report train.csv",
      dir.path);
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(dir.path / "models" / "qaoa_maxcut_0.json"));
  CHECK(fs::exists(dir.path / "train.csv"));

  auto gen = run_cli("gen --problem maxcut --n 5 --count 1 --seed 3 --out inst", dir.path);
  CHECK(gen.exit_code == 0);

  auto select = run_cli(
      "--config config.json select --instance inst/maxcut_n5_0.json "
      "--objective \"maximize: SOLUTION_QUALITY\" --constraint \"RUNTIME <= 1000\"",
      dir.path);
  CHECK(select.exit_code == 0);
  const auto selection = nlohmann::json::parse(select.output);
  CHECK(selection.at("variant") == "qaoa");
  CHECK(selection.at("predicted").contains("RUNTIME"));

  const auto lines_before = [&] {
    std::ifstream in(dir.path / "results.jsonl");
    std::string line;
    int count = 0;
    while (std::getline(in, line)) ++count;
    return count;
  }();
  auto solve = run_cli(
      "--config config.json solve --instance inst/maxcut_n5_0.json "
      "--objective \"minimize: RUNTIME\" --seed 11",
      dir.path);
  CHECK(solve.exit_code == 0);
  const auto outcome = nlohmann::json::parse(solve.output);
  CHECK(outcome.at("variant") == "qaoa");
  const auto lines_after = [&] {
    std::ifstream in(dir.path / "results.jsonl");
    std::string line;
    int count = 0;
    while (std::getline(in, line)) ++count;
    return count;
  }();
  CHECK(lines_after == lines_before + 1);

  // Infeasible constraints exit with code 2 and say so.
  auto infeasible = run_cli(
      "--config config.json select --instance inst/maxcut_n5_0.json "
      "--objective \"maximize: SOLUTION_QUALITY\" --constraint \"RUNTIME <= 0\"",
      dir.path);
  CHECK(infeasible.exit_code == 2);
  CHECK(infeasible.output.find("infeasible") != std::string::npos);

  // Untrained variants exit with code 3.
  auto untrained = run_cli(
      "select --instance inst/maxcut_n5_0.json --models models "
      "--objective \"maximize: SOLUTION_QUALITY\"",
      dir.path);
  CHECK(untrained.exit_code == 3);

  // Malformed expressions report the grammar position.
  auto malformed = run_cli(
      "--config config.json select --instance inst/maxcut_n5_0.json "
      "--objective \"maximize: SOLUTION_QUALITY +\"",
      dir.path);
  CHECK(malformed.exit_code == 1);
  CHECK(malformed.output.find("column") != std::string::npos);

  auto report = run_cli("report --store results.jsonl --out summary.csv", dir.path);
  CHECK(report.exit_code == 0);
  CHECK(read_file(dir.path / "summary.csv").rfind("problem,variant", 0) == 0);

  // Unknown config keys are rejected.
  {
    std::ofstream config(dir.path / "bad_config.json");
    config << R"({"bogus_key": 1})";
  }
  auto bad = run_cli("--config bad_config.json report --store results.jsonl --out x.csv",
                     dir.path);
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("unknown key") != std::string::npos);

  // QDAW_CONFIG provides the configuration when --config is absent.
  const std::string env_command =
      "cd '" + dir.path.string() + "' && QDAW_CONFIG=config.json '" + cli_binary() +
      "' select --instance inst/maxcut_n5_0.json --objective \"maximize: SOLUTION_QUALITY\""
      " > env_out.txt 2>&1";
  CHECK(WEXITSTATUS(std::system(env_command.c_str())) == 0);
  CHECK(nlohmann::json::parse(read_file(dir.path / "env_out.txt")).at("variant") == "qaoa");
}
