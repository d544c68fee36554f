#include "ocsynth/compositor/compositor.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ocsynth/imaging/cutout.hpp"
#include "ocsynth/imaging/io.hpp"
#include "ocsynth/util/parallel.hpp"
#include "ocsynth/util/rng.hpp"

namespace ocs {
namespace {

namespace fs = std::filesystem;

constexpr int kLayoutRounds = 20;

const Cutout& asset_of(const Placement2D& p, const AssetStore& a) {
  const auto& pool = p.distractor ? a.distractors : a.targets;
  if (p.asset < 0 || p.asset >= static_cast<int>(pool.size()))
    fail(ErrorCode::kMissingAsset, std::string(p.distractor ? "distractor" : "target") + " #" + std::to_string(p.asset));
  return pool[p.asset];
}

// Frame ownership of the topmost object so far, -1 where empty.
struct OwnerMap {
  int width, height;
  std::vector<int> owner;
  std::vector<long> visible;
  std::vector<long> area;

  OwnerMap(int w, int h) : width(w), height(h), owner(static_cast<std::size_t>(w) * h, -1) {}

  // Visible pixels each existing object would lose if `c` were pasted at
  // (x, y) on top; returns the pasted object's own in-frame pixel count.
  long probe(const Cutout& c, int x, int y, std::vector<long>& lost) const {
    lost.assign(visible.size(), 0);
    long in_frame = 0;
    const int y0 = std::max(0, -y), y1 = std::min(c.mask.height(), height - y);
    const int x0 = std::max(0, -x), x1 = std::min(c.mask.width(), width - x);
    for (int my = y0; my < y1; ++my) {
      const std::uint8_t* m = c.mask.row(my);
      const int* o = owner.data() + static_cast<std::size_t>(my + y) * width + x;
      for (int mx = x0; mx < x1; ++mx) {
        if (!m[mx]) continue;
        ++in_frame;
        if (o[mx] >= 0) ++lost[o[mx]];
      }
    }
    return in_frame;
  }

  void commit(const Cutout& c, int x, int y, long in_frame, const std::vector<long>& lost) {
    const int id = static_cast<int>(visible.size());
    for (std::size_t i = 0; i < lost.size(); ++i) visible[i] -= lost[i];
    visible.push_back(in_frame);
    area.push_back(static_cast<long>(c.mask.count()));
    const int y0 = std::max(0, -y), y1 = std::min(c.mask.height(), height - y);
    const int x0 = std::max(0, -x), x1 = std::min(c.mask.width(), width - x);
    for (int my = y0; my < y1; ++my) {
      const std::uint8_t* m = c.mask.row(my);
      int* o = owner.data() + static_cast<std::size_t>(my + y) * width + x;
      for (int mx = x0; mx < x1; ++mx)
        if (m[mx]) o[mx] = id;
    }
  }

  double occlusion(std::size_t i, long visible_px) const {
    return 1.0 - static_cast<double>(visible_px) / static_cast<double>(area[i]);
  }
};

std::pair<int, int> frame_size(const Image& background, const CompositorConfig& cfg) {
  if (cfg.frame_width > 0 && cfg.frame_height > 0) return {cfg.frame_width, cfg.frame_height};
  return {background.width(), background.height()};
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool is_mask_file(const fs::path& p) { return p.stem().extension() == ".mask"; }

std::vector<fs::path> sorted_files(const fs::path& dir, bool recursive) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::kIoFailure, "not a directory: " + dir.string());
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  } else {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Cutout load_one(const fs::path& file, int class_label, std::string id) {
  fs::path mask_path = file;
  mask_path.replace_filename(file.stem().string() + ".mask.png");
  if (fs::exists(mask_path))
    return extract_cutout(to_rgb(io::read_image(file)), io::read_mask(mask_path), class_label, std::move(id));
  const Image img = io::read_image(file);
  if (img.channels() != 4) fail(ErrorCode::kMissingAsset, "cutout needs alpha or a .mask.png: " + file.string());
  return cutout_from_rgba(img, class_label, std::move(id));
}

}  // namespace

void CompositorConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kInvalidArgument, what); };
  if (frame_width < 0 || frame_height < 0) bad("frame size must be non-negative");
  if (min_objects < 1 || min_objects > max_objects) bad("need 1 <= min_objects <= max_objects");
  if (max_distractors < 0) bad("max_distractors must be >= 0");
  if (rotation_min > rotation_max) bad("rotation_min > rotation_max");
  if (!(min_frac > 0.0) || min_frac > max_frac) bad("need 0 < min_frac <= max_frac");
  if (!(max_occlusion >= 0.0 && max_occlusion < 1.0)) bad("max_occlusion must lie in [0, 1)");
  if (min_visible_px < 1) bad("min_visible_px must be >= 1");
  if (max_attempts < 1) bad("max_attempts must be >= 1");
  if (blend_modes.empty()) bad("no blend modes enabled");
}

std::string layout_to_json(const LayoutSpec& layout) {
  nlohmann::json j;
  j["background"] = layout.background;
  j["width"] = layout.width;
  j["height"] = layout.height;
  j["seed"] = layout.seed;
  auto& ps = j["placements"] = nlohmann::json::array();
  for (const Placement2D& p : layout.placements) {
    ps.push_back({{"distractor", p.distractor},
                  {"asset", p.asset},
                  {"x", p.x},
                  {"y", p.y},
                  {"rotation", p.rotation},
                  {"scale", p.scale},
                  {"blend", to_string(p.blend)},
                  {"z_order", p.z_order}});
  }
  return j.dump();
}

std::vector<LabelBox> to_labels(const AnnotationSet& a) {
  std::vector<LabelBox> out;
  out.reserve(a.entries.size());
  for (const Annotation& e : a.entries) out.push_back({e.class_label, e.box});
  return out;
}

std::vector<Cutout> load_cutouts(const fs::path& dir, bool with_classes) {
  std::vector<Cutout> out;
  if (!with_classes) {
    for (const fs::path& f : sorted_files(dir, true)) {
      if (is_mask_file(f)) continue;
      out.push_back(load_one(f, -1, fs::relative(f, dir).replace_extension().generic_string()));
    }
    return out;
  }
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const fs::path& cd : class_dirs) {
    int cls;
    try {
      std::size_t used = 0;
      cls = std::stoi(cd.filename().string(), &used);
      if (used != cd.filename().string().size() || cls < 0) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail(ErrorCode::kMissingAsset, "class directory must be a non-negative integer: " + cd.string());
    }
    for (const fs::path& f : sorted_files(cd, false)) {
      if (is_mask_file(f)) continue;
      out.push_back(load_one(f, cls, cd.filename().string() + "/" + f.stem().string()));
    }
  }
  return out;
}

std::vector<Image> load_backgrounds(const fs::path& dir, std::vector<std::string>* names) {
  std::vector<Image> out;
  for (const fs::path& f : sorted_files(dir, false)) {
    out.push_back(to_rgb(io::read_image(f)));
    if (names) names->push_back(f.filename().string());
  }
  return out;
}

LayoutSpec sample_layout(std::uint64_t seed, const std::vector<Cutout>& targets,
                         const std::vector<Cutout>& distractors, const Image& background,
                         const CompositorConfig& cfg, std::vector<Cutout>* transformed) {
  cfg.validate();
  if (targets.empty()) fail(ErrorCode::kInvalidArgument, "no target cutouts");
  const auto [W, H] = frame_size(background, cfg);
  if (static_cast<long>(cfg.min_visible_px) > static_cast<long>(W) * H)
    fail(ErrorCode::kInfeasibleConfig, "min_visible_px exceeds the frame area");

  Rng rng(seed);
  for (int round = 0; round < kLayoutRounds; ++round) {
    struct Item {
      bool distractor;
      int asset;
    };
    std::vector<Item> items;
    const auto n_targets = rng.uniform_int(cfg.min_objects, cfg.max_objects);
    const auto n_distractors = distractors.empty() ? 0 : rng.uniform_int(0, cfg.max_distractors);
    for (std::int64_t i = 0; i < n_targets; ++i)
      items.push_back({false, static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(targets.size()) - 1))});
    for (std::int64_t i = 0; i < n_distractors; ++i)
      items.push_back({true, static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(distractors.size()) - 1))});
    rng.shuffle(std::span<Item>(items));

    LayoutSpec layout{0, W, H, seed, {}};
    std::vector<Cutout> pasted;
    std::vector<bool> is_target;
    OwnerMap map(W, H);
    std::vector<long> lost;
    bool any_target = false;

    for (const Item& item : items) {
      const Cutout& src = item.distractor ? distractors[item.asset] : targets[item.asset];
      const double rotation = rng.uniform(cfg.rotation_min, cfg.rotation_max);
      const double scale = rng.uniform(cfg.min_frac, cfg.max_frac) * W / src.mask.width();
      const BlendMode blend =
          cfg.blend_modes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cfg.blend_modes.size()) - 1))];
      Cutout t;
      try {
        t = transform_cutout(src, rotation, scale);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateScale) throw;
        continue;
      }
      const int tw = t.mask.width(), th = t.mask.height();
      const long area = static_cast<long>(t.mask.count());
      for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        // Up to half of the object may hang outside the frame on each axis.
        const int x = static_cast<int>(rng.uniform_int(-(tw / 2), W - (tw + 1) / 2));
        const int y = static_cast<int>(rng.uniform_int(-(th / 2), H - (th + 1) / 2));
        const long in_frame = map.probe(t, x, y, lost);
        if (1.0 - static_cast<double>(in_frame) / area > cfg.max_occlusion) continue;
        if (!item.distractor && in_frame < cfg.min_visible_px) continue;
        bool ok = true;
        for (std::size_t i = 0; i < lost.size() && ok; ++i) {
          if (lost[i] == 0) continue;
          const long v = map.visible[i] - lost[i];
          ok = map.occlusion(i, v) <= cfg.max_occlusion && (!is_target[i] || v >= cfg.min_visible_px);
        }
        if (!ok) continue;
        map.commit(t, x, y, in_frame, lost);
        layout.placements.push_back(
            {item.distractor, item.asset, x, y, rotation, scale, blend, static_cast<int>(layout.placements.size())});
        is_target.push_back(!item.distractor);
        any_target = any_target || !item.distractor;
        pasted.push_back(std::move(t));
        break;
      }
    }
    if (any_target) {
      if (transformed) *transformed = std::move(pasted);
      return layout;
    }
  }
  fail(ErrorCode::kInfeasibleConfig, "no target could be placed under the occlusion and visibility limits");
}

std::vector<Cutout> transformed_cutouts(const LayoutSpec& layout, const AssetStore& assets) {
  std::vector<Cutout> out;
  out.reserve(layout.placements.size());
  for (const Placement2D& p : layout.placements) out.push_back(transform_cutout(asset_of(p, assets), p.rotation, p.scale));
  return out;
}

AnnotationSet annotate_layout(const LayoutSpec& layout, const AssetStore& assets,
                              const std::vector<Cutout>& transformed) {
  if (transformed.size() != layout.placements.size())
    fail(ErrorCode::kDimensionMismatch, "one transformed cutout per placement expected");
  const int W = layout.width, H = layout.height;
  OwnerMap map(W, H);
  std::vector<long> lost;
  std::vector<std::uint8_t> cover(static_cast<std::size_t>(W) * H, 0);
  long in_frame_total = 0;
  AnnotationSet out;
  out.width = W;
  out.height = H;
  std::vector<std::optional<PixelRect>> boxes;

  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const Cutout& c = transformed[i];
    const Placement2D& p = layout.placements[i];
    const long in_frame = map.probe(c, p.x, p.y, lost);
    map.commit(c, p.x, p.y, in_frame, lost);
    in_frame_total += in_frame;
    std::optional<PixelRect> box;
    for (int my = 0; my < c.mask.height(); ++my) {
      const int fy = my + p.y;
      if (fy < 0 || fy >= H) continue;
      for (int mx = 0; mx < c.mask.width(); ++mx) {
        const int fx = mx + p.x;
        if (fx < 0 || fx >= W || !c.mask.at(mx, my)) continue;
        auto& cv = cover[static_cast<std::size_t>(fy) * W + fx];
        cv = static_cast<std::uint8_t>(std::min(cv + 1, 255));
        if (!box) box = PixelRect{fx, fy, fx + 1, fy + 1};
        box->x0 = std::min(box->x0, fx);
        box->y0 = std::min(box->y0, fy);
        box->x1 = std::max(box->x1, fx + 1);
        box->y1 = std::max(box->y1, fy + 1);
      }
    }
    boxes.push_back(box);
  }
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const double occ = map.occlusion(i, map.visible[i]);
    out.object_occlusion.push_back(occ);
    const Placement2D& p = layout.placements[i];
    if (p.distractor || !boxes[i]) continue;
    const Cutout& src = asset_of(p, assets);
    const PixelRect& r = *boxes[i];
    out.entries.push_back({src.class_label, BBox{double(r.x0), double(r.y0), double(r.x1), double(r.y1)},
                           src.instance_id, occ, p.z_order});
  }
  const long multi = std::count_if(cover.begin(), cover.end(), [](std::uint8_t v) { return v >= 2; });
  out.frame_occlusion = in_frame_total > 0 ? static_cast<double>(multi) / static_cast<double>(in_frame_total) : 0.0;
  return out;
}

Image layout_background(const LayoutSpec& layout, const AssetStore& assets) {
  if (layout.background < 0 || layout.background >= static_cast<int>(assets.backgrounds.size()))
    fail(ErrorCode::kMissingAsset, "background #" + std::to_string(layout.background));
  const Image& bg = assets.backgrounds[layout.background];
  Image rgb = bg.channels() == 3 ? bg : to_rgb(bg);
  if (rgb.width() == layout.width && rgb.height() == layout.height) return rgb;
  return resize_bilinear(rgb, layout.width, layout.height);
}

Composite render_composite(const LayoutSpec& layout, const AssetStore& assets, const BlendParams& params) {
  return render_composite(layout, assets, transformed_cutouts(layout, assets), params);
}

Composite render_composite(const LayoutSpec& layout, const AssetStore& assets, const std::vector<Cutout>& transformed,
                           const BlendParams& params) {
  Composite out{layout_background(layout, assets), annotate_layout(layout, assets, transformed)};
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const Placement2D& p = layout.placements[i];
    blend_paste_into(out.image, transformed[i], p.x, p.y, p.blend, params);
  }
  return out;
}

DatasetManifest generate_cutpaste_dataset(const AssetStore& assets, const CompositorConfig& cfg, std::uint64_t seed,
                                          const GenerationOptions& opt, GenerationStats* stats) {
  cfg.validate();
  if (assets.targets.empty()) fail(ErrorCode::kMissingAsset, "no target cutouts");
  if (assets.backgrounds.empty()) fail(ErrorCode::kMissingAsset, "no backgrounds");
  if (opt.count < 0) fail(ErrorCode::kInvalidArgument, "count must be >= 0");

  // Backgrounds are scaled once up front instead of per image.
  AssetStore scaled;
  const AssetStore* store = &assets;
  if (cfg.frame_width > 0 && cfg.frame_height > 0) {
    scaled.targets = assets.targets;
    scaled.distractors = assets.distractors;
    scaled.background_names = assets.background_names;
    for (const Image& bg : assets.backgrounds) {
      const Image rgb = bg.channels() == 3 ? bg : to_rgb(bg);
      scaled.backgrounds.push_back(rgb.width() == cfg.frame_width && rgb.height() == cfg.frame_height
                                       ? rgb
                                       : resize_bilinear(rgb, cfg.frame_width, cfg.frame_height));
    }
    store = &scaled;
  }

  std::error_code ec;
  fs::create_directories(opt.out_dir / "images", ec);
  fs::create_directories(opt.out_dir / "labels", ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + opt.out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.method = "cutpaste";
  manifest.seed = seed;
  manifest.entries.resize(static_cast<std::size_t>(opt.count));
  std::vector<std::vector<LabelBox>> labels(static_cast<std::size_t>(opt.count));

  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(opt.count, opt.workers, [&](int i) {
    const std::uint64_t image_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng pick(image_seed);
    const int bg_index =
        static_cast<int>(pick.uniform_int(0, static_cast<std::int64_t>(store->backgrounds.size()) - 1));
    std::vector<Cutout> transformed;
    LayoutSpec layout = sample_layout(pick.next(), store->targets, store->distractors, store->backgrounds[bg_index],
                                      cfg, &transformed);
    layout.background = bg_index;
    Composite comp = render_composite(layout, *store, transformed, cfg.blend);

    char stem[32];
    std::snprintf(stem, sizeof stem, "%06d", i);
    ManifestEntry& e = manifest.entries[i];
    e.image = std::string("images/") + stem + ".png";
    e.label = std::string("labels/") + stem + ".txt";
    e.source = SourceTag::kCutPaste;
    e.seed = image_seed;
    e.width = layout.width;
    e.height = layout.height;
    labels[i] = to_labels(comp.annotations);
    io::write_png(opt.out_dir / e.image, comp.image);
    write_text_file(opt.out_dir / e.label, format_yolo_labels(labels[i], e.width, e.height));
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& ls : labels)
    for (const LabelBox& l : ls) ++manifest.class_counts[l.class_label];
  write_manifest(manifest, opt.out_dir / "manifest.json");

  const double rate = seconds > 0.0 ? opt.count / seconds : 0.0;
  spdlog::info("cutpaste: {} images in {:.2f}s ({:.1f} img/s, {} workers)", opt.count, seconds, rate, opt.workers);
  if (stats) *stats = {seconds, rate};
  return manifest;
}

}  // namespace ocs
