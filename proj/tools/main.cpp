#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "config.hpp"
#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/error.hpp"

namespace {

using namespace ocs;
using nlohmann::json;

int exit_code(ErrorCode code, const std::string& sub) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInfeasibleConfig:
    case ErrorCode::kEmptyRealSubset:
    case ErrorCode::kInsufficient:
      return 2;
    case ErrorCode::kIoFailure:
    case ErrorCode::kMissingAsset:
    case ErrorCode::kDecodeFailure:
      return 3;
    case ErrorCode::kTimeout:
    case ErrorCode::kServiceRejection:
    case ErrorCode::kServiceUnavailable:
      return 4;
    case ErrorCode::kProtocolError:
      return sub == "gen-diffusion" ? 4 : 3;
    default:
      return 1;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ocsynth");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("OCSYNTH_LOG")) {
    const auto level = spdlog::level::from_str(lvl);
    if (level == spdlog::level::off && std::string(lvl) != "off")
      spdlog::warn("OCSYNTH_LOG={} not recognised, keeping info", lvl);
    else
      spdlog::set_level(level);
  }
}

struct Flags {
  std::optional<std::string> config, out, endpoint, ratio, scheme, bins;
  std::optional<long long> seed, count;
  std::optional<int> workers;
  std::optional<double> real_fraction;
  std::vector<std::string> set;
};

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Synthetic object-detection data: generation, scene planning, splitting, mixing and evaluation"};
  app.set_version_flag("--version", std::string(OCSYNTH_VERSION));
  app.require_subcommand(1);

  std::map<std::string, Flags> flags;
  for (const char* name : cli::kSubcommands) {
    const std::string sub = name;
    Flags& f = flags[sub];
    CLI::App* cmd = app.add_subcommand(sub);
    cmd->add_option("--config", f.config, "JSON config with per-subcommand blocks");
    cmd->add_option("--seed", f.seed, "Master seed");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--workers", f.workers, "Worker threads");
    cmd->add_option("--set", f.set, "Override a dotted config key, e.g. --set plan-3dcp.max_attempts=20");
    if (sub == "gen-cutpaste" || sub == "gen-diffusion" || sub == "plan-3dcp" || sub == "plan-3drp" || sub == "mix")
      cmd->add_option("--count", f.count, sub == "mix" ? "Entries in a pairwise mixture" : "Images or scenes to produce");
    if (sub == "gen-diffusion") cmd->add_option("--endpoint", f.endpoint, "Generation service base URL");
    if (sub == "split") cmd->add_option("--ratio", f.ratio, "train:val:test, e.g. 2:1:2");
    if (sub == "mix") {
      cmd->add_option("--real-fraction", f.real_fraction, "Fraction of the real manifest to sample");
      cmd->add_option("--scheme", f.scheme, "sequential or mixed");
    }
    if (sub == "eval") cmd->add_option("--bins", f.bins, "Occlusion bin edges in percent, e.g. 0,5,10,15,20");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  const Flags& f = flags[sub];
  try {
    std::vector<std::pair<std::string, json>> overrides;
    for (const std::string& s : f.set) overrides.push_back(cli::parse_override(s));
    if (f.seed) overrides.emplace_back("seed", *f.seed);
    if (f.out) overrides.emplace_back("out", *f.out);
    if (f.workers) overrides.emplace_back("workers", *f.workers);
    if (f.count) overrides.emplace_back(sub + ".count", *f.count);
    if (f.endpoint) overrides.emplace_back(sub + ".endpoint", *f.endpoint);
    if (f.ratio) overrides.emplace_back(sub + ".ratio", *f.ratio);
    if (f.real_fraction) overrides.emplace_back(sub + ".real_fraction", *f.real_fraction);
    if (f.scheme) overrides.emplace_back(sub + ".scheme", *f.scheme);
    if (f.bins) overrides.emplace_back(sub + ".bins", *f.bins);
    const std::optional<std::filesystem::path> config_file =
        f.config ? std::optional<std::filesystem::path>(*f.config) : std::nullopt;
    const json cfg = cli::resolve_config(config_file, overrides);

    const auto t0 = std::chrono::steady_clock::now();
    const cli::CommandResult r = cli::run_command(sub, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const json record{{"tool", "ocsynth"},
                      {"version", OCSYNTH_VERSION},
                      {"subcommand", sub},
                      {"seed", cfg.at("seed")},
                      {"workers", cfg.at("workers")},
                      {"config_sha256", cli::config_hash(cfg, sub)},
                      {"config", {{"seed", cfg.at("seed")}, {sub, cfg.at(sub)}}},
                      {"wall_time_s", seconds},
                      {"items", r.items},
                      {"unit", r.unit},
                      {"throughput_per_s", seconds > 0.0 ? r.items / seconds : 0.0},
                      {"summary", r.summary}};
    write_text_file(std::filesystem::path(cfg.at("out").get<std::string>()) / "run_record.json", record.dump(2) + "\n");
    spdlog::info("{}: {} {} in {:.2f}s", sub, r.items, r.unit, seconds);
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code(), sub);
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("ConfigError: {}", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("IoFailure: {}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
