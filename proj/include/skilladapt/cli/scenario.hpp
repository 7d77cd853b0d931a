#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skilladapt/engine/engine.hpp"

namespace skilladapt::cli {

using nlohmann::json;

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario's seed
  std::filesystem::path out_dir = ".";
  std::filesystem::path base_dir = ".";  // relative paths in the scenario resolve here
};

struct RunResult {
  int exit_code = 0;
  int failed_step = -1;
  std::string message;
  std::vector<std::filesystem::path> artifacts;
};

// Executes {"seed", "demo_dir", "config", "steps": [{"action", "args"}]}
// against an in-process engine. Actions: fit, tool_call, query, service,
// inject_wrench, execute, coverage, export, serve.
RunResult run_scenario(const json& scenario, const RunOptions& options, std::ostream& log);
RunResult run_scenario_file(const std::filesystem::path& file, const RunOptions& options, std::ostream& log);

// Engine configuration from a JSON object; unknown keys are rejected.
engine::EngineConfig engine_config_from_json(const json& j, const std::filesystem::path& base_dir);

}  // namespace skilladapt::cli
