#pragma once

// Drives the ocsynth binary over the bundled fixture tree and checks every
// artifact it writes.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace e2e {

// Runs `ocsynth <args>` from `cwd`, output appended to `log`; returns the
// exit status.
int run_cli(const std::filesystem::path& cli, const std::filesystem::path& cwd, const std::string& args,
            const std::filesystem::path& log);

struct SubcommandCheck {
  std::string subcommand;
  int exit_code = -1;
  std::vector<std::string> problems;  // empty when every check held
};

// Each subcommand twice, with 1 and 2 workers, into work/a and work/b; checks
// exit status, artifact schemas, the run record, config-hash equality and
// byte-identical artifacts.
std::vector<SubcommandCheck> run_fixture_suite(const std::filesystem::path& cli, const std::filesystem::path& fixtures,
                                               const std::filesystem::path& work, const std::string& endpoint);

// Relative paths of files that differ between two trees, run records aside.
std::vector<std::string> tree_differences(const std::filesystem::path& a, const std::filesystem::path& b);

nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace e2e
