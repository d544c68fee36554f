#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <mutex>

#include <spdlog/spdlog.h>

#include "ocsynth/compositor/compositor.hpp"
#include "ocsynth/dataset/plan.hpp"
#include "ocsynth/dataset/split.hpp"
#include "ocsynth/diffusion/diffusion.hpp"
#include "ocsynth/error.hpp"
#include "ocsynth/eval/eval.hpp"
#include "ocsynth/imaging/io.hpp"
#include "ocsynth/scene/planner.hpp"
#include "ocsynth/util/parallel.hpp"
#include "ocsynth/util/rng.hpp"

namespace ocs::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string stem_for(long long i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", i);
  return buf;
}

std::optional<fs::path> optional_path(const json& block, const std::string& sub, const char* key) {
  const json& v = block.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) fail(ErrorCode::kConfigError, sub + "." + key + " must be a path");
  const fs::path p = v.get<std::string>();
  if (!fs::exists(p)) fail(ErrorCode::kConfigError, sub + "." + key + " does not exist: " + p.string());
  return p;
}

fs::path required_path(const json& block, const std::string& sub, const char* key) {
  auto p = optional_path(block, sub, key);
  if (!p) fail(ErrorCode::kConfigError, sub + "." + key + " is required");
  return *p;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (directories ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

UpAxis up_axis(const json& block) {
  const auto up = parse_up_axis(block.at("up").get<std::string>());
  if (!up) fail(ErrorCode::kConfigError, "up must be one of +x,-x,+y,-y,+z,-z");
  return *up;
}

CompositorConfig layout_config(const json& b) {
  CompositorConfig c;
  c.frame_width = b.at("frame_width");
  c.frame_height = b.at("frame_height");
  c.min_objects = b.at("min_objects");
  c.max_objects = b.at("max_objects");
  c.max_distractors = b.at("max_distractors");
  c.rotation_min = b.at("rotation_min");
  c.rotation_max = b.at("rotation_max");
  c.min_frac = b.at("min_frac");
  c.max_frac = b.at("max_frac");
  c.max_occlusion = b.at("max_occlusion");
  c.min_visible_px = b.at("min_visible_px");
  c.max_attempts = b.at("max_attempts");
  c.blend_modes.clear();
  for (const json& m : b.at("blend_modes")) {
    const auto mode = m.is_string() ? parse_blend_mode(m.get<std::string>()) : std::nullopt;
    if (!mode) fail(ErrorCode::kConfigError, "unknown blend mode " + m.dump());
    c.blend_modes.push_back(*mode);
  }
  const json& bl = b.at("blend");
  c.blend = {bl.at("feather_sigma"), bl.at("feather_band"), bl.at("poisson_tolerance"), bl.at("poisson_max_iterations"),
             bl.at("poisson_relaxation")};
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.what());
  }
  return c;
}

AssetStore load_assets(const json& b, const std::string& sub) {
  AssetStore store;
  store.targets = load_cutouts(required_path(b, sub, "targets"), true);
  if (auto d = optional_path(b, sub, "distractors")) store.distractors = load_cutouts(*d, false);
  store.backgrounds = load_backgrounds(required_path(b, sub, "backgrounds"), &store.background_names);
  if (store.targets.empty()) fail(ErrorCode::kConfigError, sub + ".targets holds no cutouts");
  if (store.backgrounds.empty()) fail(ErrorCode::kConfigError, sub + ".backgrounds holds no images");
  return store;
}

CommandResult generation_result(const DatasetManifest& m, const GenerationStats& stats) {
  long long boxes = 0;
  for (const auto& [cls, n] : m.class_counts) boxes += n;
  return {static_cast<long long>(m.entries.size()), "images",
          {{"images", m.entries.size()}, {"boxes", boxes}, {"generation_seconds", stats.seconds}}};
}

CommandResult gen_cutpaste(const json& cfg) {
  const json& b = cfg.at("gen-cutpaste");
  const AssetStore store = load_assets(b, "gen-cutpaste");
  GenerationStats stats;
  const auto m = generate_cutpaste_dataset(store, layout_config(b), cfg.at("seed").get<std::uint64_t>(),
                                           {b.at("count").get<int>(), cfg.at("workers").get<int>(), cfg.at("out").get<std::string>()},
                                           &stats);
  return generation_result(m, stats);
}

CommandResult gen_diffusion(const json& cfg) {
  const json& b = cfg.at("gen-diffusion");
  if (!b.at("endpoint").is_string()) fail(ErrorCode::kConfigError, "gen-diffusion needs --endpoint");
  const AssetStore store = load_assets(b, "gen-diffusion");
  DiffusionConfig d;
  d.canny = {b.at("canny").at("sigma"), b.at("canny").at("low"), b.at("canny").at("high")};
  d.edge_dilation = b.at("edge_dilation");
  d.prompt = b.at("prompt");
  d.negative_prompt = b.at("negative_prompt");
  d.steps = b.at("steps");
  d.guidance = b.at("guidance");
  d.service = {b.at("timeout_s"), b.at("retries"), b.at("backoff_base_s"), b.at("backoff_factor")};
  d.concurrency = b.at("concurrency");
  d.feather_band = b.at("feather_band");
  d.feather_sigma = b.at("feather_sigma");
  d.ring_width = b.at("ring_width");
  GenerationStats stats;
  const auto m = generate_diffusion_dataset(
      store, layout_config(b), d, b.at("endpoint").get<std::string>(), cfg.at("seed").get<std::uint64_t>(),
      {b.at("count").get<int>(), cfg.at("workers").get<int>(), cfg.at("out").get<std::string>()}, &stats);
  return generation_result(m, stats);
}

std::vector<MeshObject> load_meshes(const json& b, const std::string& sub) {
  std::vector<MeshObject> out;
  for (const fs::path& dir : sorted_entries(required_path(b, sub, "meshes"), true)) {
    int cls = 0;
    try {
      std::size_t used = 0;
      cls = std::stoi(dir.filename().string(), &used);
      if (used != dir.filename().string().size()) throw std::invalid_argument("suffix");
    } catch (const std::exception&) {
      fail(ErrorCode::kConfigError, "mesh class directory must be an integer: " + dir.string());
    }
    for (const fs::path& f : sorted_entries(dir, false)) {
      const std::string ext = f.extension().string();
      if (ext != ".obj" && ext != ".gltf" && ext != ".glb") continue;
      MeshObject m = load_mesh(f);
      m.class_label = cls;
      m.instance_id = f.stem().string();
      out.push_back(std::move(m));
    }
  }
  if (out.empty()) fail(ErrorCode::kConfigError, sub + ".meshes holds no meshes");
  return out;
}

// Distinct meshes for one scene, drawn from the scene's own stream.
std::vector<MeshObject> pick_objects(const std::vector<MeshObject>& meshes, const json& b, Rng& rng) {
  const int lo = b.at("objects_min"), hi = b.at("objects_max");
  if (lo < 1 || hi < lo) fail(ErrorCode::kConfigError, "need 1 <= objects_min <= objects_max");
  const int n = std::min(static_cast<int>(rng.uniform_int(lo, hi)), static_cast<int>(meshes.size()));
  std::vector<int> idx(meshes.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < n; ++i) std::swap(idx[i], idx[rng.uniform_int(i, static_cast<std::int64_t>(idx.size()) - 1)]);
  std::vector<MeshObject> out;
  for (int i = 0; i < n; ++i) out.push_back(meshes[idx[i]]);
  return out;
}

void write_scene_artifacts(const fs::path& out, const std::string& stem, const SceneDescription& s) {
  write_scene(out / "scenes" / (stem + ".json"), s);
  std::vector<LabelBox> labels;
  for (const SceneAnnotation& a : s.annotations) labels.push_back({a.class_label, a.box});
  write_text_file(out / "labels" / (stem + ".txt"),
                  format_yolo_labels(labels, s.camera.intrinsics.width, s.camera.intrinsics.height));
}

template <typename Plan>
SceneDescription plan_with_retries(const json& b, std::uint64_t scene_seed, Plan&& plan) {
  const int retries = b.at("scene_retries");
  for (int attempt = 0;; ++attempt) {
    try {
      return plan(attempt == 0 ? scene_seed : derive_seed(scene_seed, static_cast<std::uint64_t>(attempt)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyScene || attempt >= retries) throw;
    }
  }
}

CommandResult plan_3dcp(const json& cfg) {
  const json& b = cfg.at("plan-3dcp");
  const fs::path bg_dir = required_path(b, "plan-3dcp", "backgrounds");
  const auto k_path = optional_path(b, "plan-3dcp", "intrinsics");
  const CameraIntrinsics k = read_intrinsics(k_path ? *k_path : bg_dir / "intrinsics.json");
  const std::vector<MeshObject> meshes = load_meshes(b, "plan-3dcp");

  PlacementConfig pc;
  const json& pl = b.at("planes");
  pc.planes = {pl.at("block_size"), pl.at("merge_mse_max"), pl.at("min_inliers"), pl.at("min_block_fill")};
  pc.up = up_axis(b);
  pc.horizontal_thresh_deg = b.at("horizontal_thresh_deg");
  pc.max_attempts = b.at("max_attempts");
  pc.clearance = b.at("clearance");
  pc.full_rotation = b.at("full_rotation");
  pc.scale_min = b.at("scale_min");
  pc.scale_max = b.at("scale_max");
  pc.min_frac = b.at("min_frac");
  pc.max_frac = b.at("max_frac");
  try {
    pc.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.what());
  }

  const fs::path rgb_dir = bg_dir / "rgb", depth_dir = bg_dir / "depth";
  if (!fs::is_directory(rgb_dir) || !fs::is_directory(depth_dir))
    fail(ErrorCode::kConfigError, "plan-3dcp.backgrounds needs rgb/ and depth/ subdirectories");
  std::vector<fs::path> rgb_files;
  for (const fs::path& f : sorted_entries(rgb_dir, false))
    if (fs::exists(depth_dir / (f.stem().string() + ".png"))) rgb_files.push_back(f);
  if (rgb_files.empty()) fail(ErrorCode::kConfigError, "no rgb/depth background pairs in " + bg_dir.string());

  // Plane detection runs once per background and is shared by every scene.
  const int workers = cfg.at("workers");
  std::vector<std::optional<RgbdBackground>> cache(rgb_files.size());
  parallel_for(static_cast<int>(rgb_files.size()), workers, [&](int i) {
    const fs::path depth = depth_dir / (rgb_files[i].stem().string() + ".png");
    RgbdBackground bg = load_rgbd_background(rgb_files[i], depth, k, pc.planes);
    try {
      select_support_planes(bg.planes, pc.up, pc.horizontal_thresh_deg);
      cache[i] = std::move(bg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoHorizontalPlane) throw;
      spdlog::warn("plan-3dcp: {} has no horizontal plane, skipped", rgb_files[i].string());
    }
  });
  std::vector<const RgbdBackground*> usable;
  for (const auto& c : cache)
    if (c) usable.push_back(&*c);
  if (usable.empty()) fail(ErrorCode::kNoHorizontalPlane, "no background has a horizontal plane");

  const fs::path out = cfg.at("out").get<std::string>();
  const int count = b.at("count");
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  std::vector<int> placed(static_cast<std::size_t>(count));
  parallel_for(count, workers, [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const RgbdBackground& bg = *usable[rng.uniform_int(0, static_cast<std::int64_t>(usable.size()) - 1)];
    const auto objects = pick_objects(meshes, b, rng);
    const SceneDescription s =
        plan_with_retries(b, rng.next(), [&](std::uint64_t sd) { return plan_scene_3dcp(bg, objects, pc, sd); });
    placed[i] = static_cast<int>(s.objects.size());
    write_scene_artifacts(out, stem_for(i), s);
  });
  long long objects = 0;
  for (int n : placed) objects += n;
  return {count, "scenes", {{"scenes", count}, {"objects", objects}, {"backgrounds", usable.size()}}};
}

CommandResult plan_3drp(const json& cfg) {
  const json& b = cfg.at("plan-3drp");
  const std::vector<fs::path> hdris = sorted_entries(required_path(b, "plan-3drp", "hdris"), false);
  if (hdris.empty()) fail(ErrorCode::kConfigError, "plan-3drp.hdris holds no files");
  const std::vector<MeshObject> meshes = load_meshes(b, "plan-3drp");
  ViewConfig vc;
  const json& k = b.at("intrinsics");
  vc.intrinsics = {k.at("fx"), k.at("fy"), k.at("cx"), k.at("cy"), k.at("width"), k.at("height")};
  vc.up = up_axis(b);
  vc.z_min = b.at("z_min");
  vc.z_max = b.at("z_max");
  vc.views_per_scene = b.at("views_per_scene");
  vc.azimuth_min = b.at("azimuth_min");
  vc.azimuth_max = b.at("azimuth_max");
  vc.elevation_min = b.at("elevation_min");
  vc.elevation_max = b.at("elevation_max");
  vc.zoom_min = b.at("zoom_min");
  vc.zoom_max = b.at("zoom_max");
  vc.ev_min = b.at("ev_min");
  vc.ev_max = b.at("ev_max");
  vc.max_attempts = b.at("max_attempts");
  vc.scale_min = b.at("scale_min");
  vc.scale_max = b.at("scale_max");
  vc.min_frac = b.at("min_frac");
  vc.max_frac = b.at("max_frac");
  try {
    vc.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.what());
  }

  const fs::path out = cfg.at("out").get<std::string>();
  const int count = b.at("count");
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const int retries = b.at("scene_retries");
  parallel_for(count, cfg.at("workers").get<int>(), [&](int i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const std::string hdri = hdris[rng.uniform_int(0, static_cast<std::int64_t>(hdris.size()) - 1)].string();
    const auto objects = pick_objects(meshes, b, rng);
    const std::uint64_t scene_seed = rng.next();
    std::vector<SceneDescription> views;
    for (int attempt = 0;; ++attempt) {
      try {
        views = plan_scene_3drp(hdri, objects, vc,
                                attempt == 0 ? scene_seed : derive_seed(scene_seed, static_cast<std::uint64_t>(attempt)));
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kEmptyScene || attempt >= retries) throw;
      }
    }
    for (const SceneDescription& v : views) write_scene_artifacts(out, stem_for(i) + "_v" + std::to_string(v.view), v);
  });
  return {static_cast<long long>(count) * vc.views_per_scene, "views",
          {{"scenes", count}, {"views", static_cast<long long>(count) * vc.views_per_scene}}};
}

CommandResult split(const json& cfg) {
  const json& b = cfg.at("split");
  const auto videos = read_videos(required_path(b, "split", "videos"));
  SplitRatio ratio;
  try {
    ratio = parse_ratio(b.at("ratio").get<std::string>());
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.what());
  }
  const auto graph = build_cooccurrence_graph(videos);
  const auto s = greedy_split(graph, ratio);
  const fs::path out = cfg.at("out").get<std::string>();
  write_text_file(out / "split.json", split_report_json(graph, s));
  for (Split sp : kSplits) {
    std::vector<VideoRecord> part;
    for (const VideoRecord& v : videos)
      if (s.videos.at(v.id) == sp) part.push_back(v);
    write_text_file(out / (std::string(to_string(sp)) + "_videos.json"), videos_to_json(part));
  }
  spdlog::info("split: instances {}/{}/{}, videos {}/{}/{}, max deviation {:.3f}", s.instance_totals[0],
               s.instance_totals[1], s.instance_totals[2], s.video_totals[0], s.video_totals[1], s.video_totals[2],
               s.max_deviation());
  return {static_cast<long long>(graph.nodes.size()), "instances",
          {{"instances", s.instance_totals}, {"videos", s.video_totals}, {"frames", s.frame_totals},
           {"components", graph.components.size()}, {"max_deviation", s.max_deviation()}}};
}

DatasetManifest load_rebased(const fs::path& path, const fs::path& out) {
  return rebase_manifest(read_manifest(path), path.parent_path(), out);
}

CommandResult mix(const json& cfg) {
  const json& b = cfg.at("mix");
  const fs::path out = cfg.at("out").get<std::string>();
  fs::create_directories(out);
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  std::vector<DatasetManifest> synthetic;
  for (const json& p : b.at("synthetic")) {
    if (!p.is_string() || !fs::exists(p.get<std::string>()))
      fail(ErrorCode::kConfigError, "mix.synthetic entry " + p.dump() + " is not an existing manifest");
    synthetic.push_back(load_rebased(p.get<std::string>(), out));
  }
  if (synthetic.empty() || synthetic.size() > 2) fail(ErrorCode::kConfigError, "mix.synthetic needs one or two manifests");
  const long long count = b.at("count");
  if (count < 0) fail(ErrorCode::kConfigError, "mix.count must be non-negative");
  DatasetManifest mixture = synthetic[0];
  if (synthetic.size() == 2) {
    if (count == 0) fail(ErrorCode::kConfigError, "mixing two manifests needs --count");
    mixture = mix_synthetic_pair(synthetic[0], synthetic[1], static_cast<std::size_t>(count), seed);
  } else if (count > 0) {
    mixture = mix_synthetic_pair(synthetic[0], synthetic[0], static_cast<std::size_t>(count), seed);
  }
  mixture.class_counts = count_classes(mixture, out);
  write_manifest(mixture, out / "manifest.json");

  std::vector<std::pair<std::string, DatasetManifest>> to_export{{"mixture", mixture}};
  json summary{{"entries", mixture.entries.size()}};
  long long items = static_cast<long long>(mixture.entries.size());
  if (auto real_path = optional_path(b, "mix", "real")) {
    TrainingScheme scheme;
    try {
      scheme = parse_scheme(b.at("scheme").get<std::string>());
    } catch (const Error& e) {
      fail(ErrorCode::kConfigError, e.what());
    }
    TrainingPlan plan = assemble_training_plan(scheme, mixture, load_rebased(*real_path, out),
                                               b.at("real_fraction").get<double>(), derive_seed(seed, 1));
    to_export.clear();
    json stages = json::array();
    items = 0;
    for (TrainingStage& st : plan.stages) {
      st.manifest.class_counts = count_classes(st.manifest, out);
      stages.push_back({{"name", st.name}, {"entries", st.manifest.entries.size()}});
      items += static_cast<long long>(st.manifest.entries.size());
      to_export.emplace_back(st.name, st.manifest);
    }
    write_text_file(out / "plan.json", plan_to_json(plan));
    summary["stages"] = stages;
  }
  if (b.at("export").is_string()) {
    ExportFormat fmt;
    try {
      fmt = parse_export_format(b.at("export").get<std::string>());
    } catch (const Error& e) {
      fail(ErrorCode::kConfigError, e.what());
    }
    for (const auto& [name, m] : to_export) export_manifest(m, out, fmt, out / "export" / name);
  }
  return {items, "entries", summary};
}

CommandResult eval(const json& cfg) {
  const json& b = cfg.at("eval");
  const fs::path gt_path = required_path(b, "eval", "ground_truth");
  EvalSet set = load_ground_truth(read_manifest(gt_path), gt_path.parent_path(), optional_path(b, "eval", "masks"));
  const fs::path preds = required_path(b, "eval", "predictions");
  const std::string format = b.at("format");
  if (format == "yolo")
    load_yolo_predictions(set, preds);
  else if (format == "coco")
    load_coco_results(set, preds);
  else
    fail(ErrorCode::kConfigError, "eval.format must be yolo or coco");

  EvalConfig ec;
  ec.iou_thresh = b.at("iou");
  const std::string method = b.at("ap_method");
  if (method != "101" && method != "envelope") fail(ErrorCode::kConfigError, "eval.ap_method must be 101 or envelope");
  ec.method = method == "101" ? ApMethod::k101Point : ApMethod::kEnvelope;
  try {
    ec.bin_edges = parse_bin_edges(b.at("bins").get<std::string>());
    ec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.what());
  }
  const EvalReport r = evaluate(set, ec);
  const fs::path out = cfg.at("out").get<std::string>();
  write_text_file(out / "report.json", report_to_json(r));
  const std::string table = report_table(r);
  write_text_file(out / "report.txt", table);
  std::cout << table << std::flush;
  return {static_cast<long long>(set.images.size()), "images",
          {{"images", set.images.size()}, {"detections", set.detections.size()}, {"map50", r.map ? json(*r.map) : json(nullptr)}}};
}

}  // namespace

CommandResult run_command(const std::string& sub, const json& cfg) {
  fs::create_directories(cfg.at("out").get<std::string>());
  if (sub == "gen-cutpaste") return gen_cutpaste(cfg);
  if (sub == "gen-diffusion") return gen_diffusion(cfg);
  if (sub == "plan-3dcp") return plan_3dcp(cfg);
  if (sub == "plan-3drp") return plan_3drp(cfg);
  if (sub == "split") return split(cfg);
  if (sub == "mix") return mix(cfg);
  if (sub == "eval") return eval(cfg);
  fail(ErrorCode::kConfigError, "unknown subcommand " + sub);
}

}  // namespace ocs::cli
