#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ocs::cli {

using nlohmann::json;

inline constexpr const char* kSubcommands[] = {"gen-cutpaste", "gen-diffusion", "plan-3dcp", "plan-3drp",
                                               "split",        "mix",           "eval"};

// Every accepted key with its default. Keys absent here are rejected.
const json& config_defaults();

// Parses "a.b.c=value"; the value is read as JSON when it parses, otherwise
// as a string.
std::pair<std::string, json> parse_override(const std::string& text);

// Defaults, then the config file, then overrides in order. Throws ConfigError
// on unknown keys, type mismatches and a missing seed or output directory.
json resolve_config(const std::optional<std::filesystem::path>& file,
                    const std::vector<std::pair<std::string, json>>& overrides);

// SHA-256 of the canonical dump of the seed and the subcommand's block; the
// worker count and output directory cannot change artifact bytes.
std::string config_hash(const json& resolved, const std::string& subcommand);

}  // namespace ocs::cli
