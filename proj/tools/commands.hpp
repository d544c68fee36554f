#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace ocs::cli {

struct CommandResult {
  long long items = 0;  // images, scenes, instances or reports produced
  std::string unit;
  nlohmann::json summary = nlohmann::json::object();
};

// `cfg` is the resolved config; artifacts go under cfg["out"].
CommandResult run_command(const std::string& subcommand, const nlohmann::json& cfg);

}  // namespace ocs::cli
