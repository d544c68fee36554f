#include "config.hpp"

#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/error.hpp"
#include "ocsynth/util/encoding.hpp"

namespace ocs::cli {

namespace {

json layout_block() {
  return {{"targets", nullptr},
          {"distractors", nullptr},
          {"backgrounds", nullptr},
          {"count", 10},
          {"frame_width", 512},
          {"frame_height", 512},
          {"min_objects", 1},
          {"max_objects", 6},
          {"max_distractors", 2},
          {"rotation_min", -30.0},
          {"rotation_max", 30.0},
          {"min_frac", 0.08},
          {"max_frac", 0.3},
          {"max_occlusion", 0.5},
          {"min_visible_px", 400},
          {"max_attempts", 50},
          {"blend_modes", {"direct", "feathered", "gradient_domain"}},
          {"blend",
           {{"feather_sigma", 2.0},
            {"feather_band", 5},
            {"poisson_tolerance", 0.5},
            {"poisson_max_iterations", 10000},
            {"poisson_relaxation", 0.0}}}};
}

json mesh_block() {
  return {{"meshes", nullptr},   {"count", 10},        {"objects_min", 1},  {"objects_max", 4},
          {"max_attempts", 50},  {"scale_min", 1.0},   {"scale_max", 1.0},  {"min_frac", 0.005},
          {"max_frac", 0.4},     {"up", "-y"},         {"scene_retries", 10}};
}

json build_defaults() {
  json diffusion = layout_block();
  diffusion.update(json{{"endpoint", nullptr},
                        {"prompt", ""},
                        {"negative_prompt", ""},
                        {"steps", 6},
                        {"guidance", 1.5},
                        {"edge_dilation", 3},
                        {"canny", {{"sigma", 1.4}, {"low", 100.0}, {"high", 200.0}}},
                        {"timeout_s", 120.0},
                        {"retries", 3},
                        {"backoff_base_s", 1.0},
                        {"backoff_factor", 2.0},
                        {"concurrency", 4},
                        {"feather_band", 2},
                        {"feather_sigma", 1.0},
                        {"ring_width", 8}});

  json cp = mesh_block();
  cp.update(json{{"backgrounds", nullptr},
                 {"intrinsics", nullptr},
                 {"horizontal_thresh_deg", 10.0},
                 {"clearance", 0.005},
                 {"full_rotation", true},
                 {"planes", {{"block_size", 10}, {"merge_mse_max", 25e-6}, {"min_inliers", 400}, {"min_block_fill", 0.75}}}});

  json rp = mesh_block();
  rp.update(json{{"hdris", nullptr},
                 {"intrinsics", {{"fx", 500.0}, {"fy", 500.0}, {"cx", 320.0}, {"cy", 240.0}, {"width", 640}, {"height", 480}}},
                 {"views_per_scene", 1},
                 {"z_min", 0.5},
                 {"z_max", 4.0},
                 {"azimuth_min", -180.0},
                 {"azimuth_max", 180.0},
                 {"elevation_min", -15.0},
                 {"elevation_max", 30.0},
                 {"zoom_min", 0.8},
                 {"zoom_max", 1.5},
                 {"ev_min", -1.0},
                 {"ev_max", 1.0}});

  return {{"seed", nullptr},
          {"out", nullptr},
          {"workers", 1},
          {"gen-cutpaste", layout_block()},
          {"gen-diffusion", diffusion},
          {"plan-3dcp", cp},
          {"plan-3drp", rp},
          {"split", {{"videos", nullptr}, {"ratio", "2:1:2"}}},
          {"mix",
           {{"synthetic", json::array()},
            {"real", nullptr},
            {"count", 0},
            {"scheme", "sequential"},
            {"real_fraction", 0.1},
            {"export", nullptr}}},
          {"eval",
           {{"ground_truth", nullptr},
            {"masks", nullptr},
            {"predictions", nullptr},
            {"format", "yolo"},
            {"iou", 0.5},
            {"bins", "0,5,10,15,20"},
            {"ap_method", "101"}}}};
}

bool compatible(const json& def, const json& value) {
  if (def.is_null()) return value.is_null() || value.is_string() || value.is_number_integer();
  if (def.is_number()) return value.is_number() && (def.is_number_float() || !value.is_number_float());
  return def.type() == value.type();
}

void merge(json& target, const json& defaults, const json& source, const std::string& prefix) {
  if (!source.is_object()) fail(ErrorCode::kConfigError, "'" + prefix + "' must be an object");
  for (const auto& [key, value] : source.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) fail(ErrorCode::kConfigError, "unknown config key '" + path + "'");
    const json& def = defaults.at(key);
    if (def.is_object()) {
      merge(target[key], def, value, path);
    } else {
      if (!compatible(def, value)) fail(ErrorCode::kConfigError, "config key '" + path + "' has the wrong type");
      target[key] = value;
    }
  }
}

}  // namespace

const json& config_defaults() {
  static const json d = build_defaults();
  return d;
}

std::pair<std::string, json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorCode::kConfigError, "override '" + text + "' is not key=value");
  const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

json resolve_config(const std::optional<std::filesystem::path>& file,
                    const std::vector<std::pair<std::string, json>>& overrides) {
  const json& defaults = config_defaults();
  json cfg = defaults;
  if (file) {
    std::string text;
    try {
      text = read_text_file(*file);
    } catch (const Error& e) {
      fail(ErrorCode::kConfigError, e.what());
    }
    const json user = json::parse(text, nullptr, false);
    if (user.is_discarded()) fail(ErrorCode::kConfigError, "config " + file->string() + " is not valid JSON");
    merge(cfg, defaults, user, "");
  }
  for (const auto& [key, value] : overrides) {
    json nested = value;
    std::string k = key;
    for (auto dot = k.rfind('.'); dot != std::string::npos; dot = k.rfind('.')) {
      nested = json{{k.substr(dot + 1), nested}};
      k = k.substr(0, dot);
    }
    merge(cfg, defaults, json{{k, nested}}, "");
  }
  if (!cfg["seed"].is_number_integer() || cfg["seed"].get<long long>() < 0)
    fail(ErrorCode::kConfigError, "a non-negative integer seed is required (--seed or \"seed\")");
  if (!cfg["out"].is_string() || cfg["out"].get<std::string>().empty())
    fail(ErrorCode::kConfigError, "an output directory is required (--out or \"out\")");
  if (cfg["workers"].get<int>() < 1) fail(ErrorCode::kConfigError, "workers must be at least 1");
  return cfg;
}

std::string config_hash(const json& resolved, const std::string& subcommand) {
  const json c{{"seed", resolved.at("seed")}, {"subcommand", subcommand}, {subcommand, resolved.at(subcommand)}};
  return sha256_hex(c.dump());
}

}  // namespace ocs::cli
