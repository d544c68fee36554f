#include "ocsynth/diffusion/diffusion.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ocsynth/imaging/blend.hpp"
#include "ocsynth/imaging/io.hpp"
#include "ocsynth/util/encoding.hpp"
#include "ocsynth/util/parallel.hpp"
#include "ocsynth/util/rng.hpp"

namespace ocs {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ParsedEndpoint {
  std::string base;  // scheme://host:port
  std::string path;  // full request path
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos || endpoint.substr(0, scheme) != "http")
    fail(ErrorCode::kInvalidArgument, "endpoint must start with http://: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  ParsedEndpoint out;
  out.base = endpoint.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : endpoint.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  out.path = prefix + "/generate";
  return out;
}

Mask frame_union(const LayoutSpec& layout, const std::vector<Cutout>& transformed) {
  Mask out(layout.width, layout.height);
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const Cutout& c = transformed[i];
    const Placement2D& p = layout.placements[i];
    for (int y = 0; y < c.mask.height(); ++y)
      for (int x = 0; x < c.mask.width(); ++x)
        if (c.mask.at(x, y) && out.contains(x + p.x, y + p.y)) out.at(x + p.x, y + p.y) = 1;
  }
  return out;
}

GenerationResult parse_response(const std::string& body, const ConditioningPayload& p) {
  GenerationResult r;
  try {
    const json j = json::parse(body);
    const auto bytes = base64_decode(j.at("image").get<std::string>());
    try {
      r.image = to_rgb(io::decode_image(bytes));
    } catch (const Error& e) {
      fail(ErrorCode::kProtocolError, std::string("undecodable image: ") + e.what());
    }
    r.seed_echo = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("malformed response: ") + e.what());
  }
  if (r.image.width() != p.width || r.image.height() != p.height)
    fail(ErrorCode::kProtocolError, "service returned " + std::to_string(r.image.width()) + "x" +
                                        std::to_string(r.image.height()) + ", requested " + std::to_string(p.width) +
                                        "x" + std::to_string(p.height));
  return r;
}

}  // namespace

Image blank_canvas_composite(const LayoutSpec& layout, const std::vector<Cutout>& transformed) {
  Image canvas(layout.width, layout.height, 3, kBlankCanvasGray);
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const Placement2D& p = layout.placements[i];
    blend_paste_into(canvas, transformed[i], p.x, p.y, BlendMode::kDirect);
  }
  return canvas;
}

ConditioningPayload build_conditioning(const LayoutSpec& layout, const std::vector<Cutout>& transformed,
                                       const Image& reference, const DiffusionConfig& cfg, std::uint64_t seed) {
  if (cfg.steps < 1) fail(ErrorCode::kInvalidArgument, "steps must be >= 1");
  ConditioningPayload p;
  p.width = layout.width;
  p.height = layout.height;
  p.edge_map = canny_edges(blank_canvas_composite(layout, transformed), cfg.canny);
  const Mask keep = dilate(frame_union(layout, transformed), cfg.edge_dilation);
  for (std::size_t i = 0; i < keep.data().size(); ++i) p.edge_map.data()[i] &= keep.data()[i];
  p.reference_background = to_rgb(reference);
  p.positive_prompt = cfg.prompt;
  p.negative_prompt = cfg.negative_prompt;
  p.seed = seed;
  p.steps = cfg.steps;
  p.guidance = cfg.guidance;
  return p;
}

std::string payload_to_json(const ConditioningPayload& p) {
  json j;
  j["edge_map"] = base64_encode(io::encode_mask_png(p.edge_map));
  j["ip_image"] = base64_encode(io::encode_png(p.reference_background));
  j["prompt"] = p.positive_prompt;
  j["negative_prompt"] = p.negative_prompt;
  j["seed"] = p.seed;
  j["steps"] = p.steps;
  j["cfg"] = p.guidance;
  j["width"] = p.width;
  j["height"] = p.height;
  return j.dump();
}

GenerationResult request_generation(const std::string& endpoint, const ConditioningPayload& payload,
                                    const ServiceOptions& opt) {
  if (payload.edge_map.width() != payload.width || payload.edge_map.height() != payload.height)
    fail(ErrorCode::kDimensionMismatch, "edge map does not match the requested resolution");
  const ParsedEndpoint ep = parse_endpoint(endpoint);
  httplib::Client client(ep.base);
  const auto timeout = std::chrono::duration<double>(opt.timeout_s);
  const auto as_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  client.set_connection_timeout(as_us);
  client.set_read_timeout(as_us);
  client.set_write_timeout(as_us);

  const std::string body = payload_to_json(payload);
  ErrorCode last = ErrorCode::kServiceUnavailable;
  std::string last_what;
  for (int attempt = 0; attempt <= opt.retries; ++attempt) {
    if (attempt > 0) {
      const double wait = opt.backoff_base_s * std::pow(opt.backoff_factor, attempt - 1);
      spdlog::debug("generation retry {} after {:.3f}s: {}", attempt, wait, last_what);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const httplib::Result res = client.Post(ep.path, body, "application/json");
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!res) {
      const httplib::Error err = res.error();
      last = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ? ErrorCode::kTimeout
                                                                                      : ErrorCode::kServiceUnavailable;
      last_what = httplib::to_string(err);
      continue;
    }
    if (res->status >= 400 && res->status < 500)
      fail(ErrorCode::kServiceRejection, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    if (res->status >= 500) {
      last = ErrorCode::kServiceUnavailable;
      last_what = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) fail(ErrorCode::kProtocolError, "unexpected HTTP " + std::to_string(res->status));
    GenerationResult r = parse_response(res->body, payload);
    r.latency_ms = ms;
    r.retries = attempt;
    return r;
  }
  fail(last, "gave up after " + std::to_string(opt.retries) + " retries: " + last_what);
}

FinalComposite composite_final(const Image& generated, const LayoutSpec& layout, const AssetStore& assets,
                               const std::vector<Cutout>& transformed, const DiffusionConfig& cfg) {
  if (generated.width() != layout.width || generated.height() != layout.height)
    fail(ErrorCode::kDimensionMismatch, "generated image does not match the layout frame");
  FinalComposite out;
  out.image = to_rgb(generated);
  out.annotations = annotate_layout(layout, assets, transformed);
  BlendParams feather;
  feather.feather_band = cfg.feather_band;
  feather.feather_sigma = cfg.feather_sigma;
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const Placement2D& p = layout.placements[i];
    blend_paste_into(out.image, transformed[i], p.x, p.y, BlendMode::kFeathered, feather);
  }

  std::vector<int> owner(static_cast<std::size_t>(layout.width) * layout.height, -1);
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    const Cutout& c = transformed[i];
    const Placement2D& p = layout.placements[i];
    for (int y = 0; y < c.mask.height(); ++y) {
      const int fy = y + p.y;
      if (fy < 0 || fy >= layout.height) continue;
      for (int x = 0; x < c.mask.width(); ++x) {
        const int fx = x + p.x;
        if (fx >= 0 && fx < layout.width && c.mask.at(x, y)) owner[static_cast<std::size_t>(fy) * layout.width + fx] = int(i);
      }
    }
  }
  for (std::size_t i = 0; i < transformed.size(); ++i) {
    Mask region(layout.width, layout.height);
    for (std::size_t k = 0; k < owner.size(); ++k) region.data()[k] = owner[k] == static_cast<int>(i);
    LabTransform t;
    try {
      t = estimate_harmonization(out.image, region, cfg.ring_width);
      out.image = apply_harmonization(out.image, region, t);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyRing && e.code() != ErrorCode::kEmptyInput) throw;
      region = Mask(layout.width, layout.height);
      t = LabTransform{};
    }
    out.regions.push_back(std::move(region));
    out.transforms.push_back(t);
  }
  return out;
}

DatasetManifest generate_diffusion_dataset(const AssetStore& assets, const CompositorConfig& layout_cfg,
                                           const DiffusionConfig& cfg, const std::string& endpoint,
                                           std::uint64_t seed, const GenerationOptions& opt, GenerationStats* stats) {
  layout_cfg.validate();
  if (assets.targets.empty()) fail(ErrorCode::kMissingAsset, "no target cutouts");
  if (assets.backgrounds.empty()) fail(ErrorCode::kMissingAsset, "no reference backgrounds");
  if (opt.count < 0) fail(ErrorCode::kInvalidArgument, "count must be >= 0");
  std::error_code ec;
  fs::create_directories(opt.out_dir / "images", ec);
  fs::create_directories(opt.out_dir / "labels", ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + opt.out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.method = "diffusion_cp";
  manifest.seed = seed;
  manifest.entries.resize(static_cast<std::size_t>(opt.count));
  std::vector<std::vector<LabelBox>> labels(static_cast<std::size_t>(opt.count));

  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(opt.count, cfg.concurrency, [&](int i) {
    const std::uint64_t image_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng pick(image_seed);
    const int bg_index = static_cast<int>(pick.uniform_int(0, static_cast<std::int64_t>(assets.backgrounds.size()) - 1));
    std::vector<Cutout> transformed;
    LayoutSpec layout = sample_layout(pick.next(), assets.targets, assets.distractors, assets.backgrounds[bg_index],
                                      layout_cfg, &transformed);
    layout.background = bg_index;
    const ConditioningPayload payload = build_conditioning(layout, transformed, layout_background(layout, assets), cfg,
                                                           pick.next() & 0x7fffffffULL);
    const GenerationResult gen = request_generation(endpoint, payload, cfg.service);
    const FinalComposite fin = composite_final(gen.image, layout, assets, transformed, cfg);

    char stem[32];
    std::snprintf(stem, sizeof stem, "%06d", i);
    ManifestEntry& e = manifest.entries[i];
    e.image = std::string("images/") + stem + ".png";
    e.label = std::string("labels/") + stem + ".txt";
    e.source = SourceTag::kDiffusionCp;
    e.seed = image_seed;
    e.width = layout.width;
    e.height = layout.height;
    labels[i] = to_labels(fin.annotations);
    io::write_png(opt.out_dir / e.image, fin.image);
    write_text_file(opt.out_dir / e.label, format_yolo_labels(labels[i], e.width, e.height));
  });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& ls : labels)
    for (const LabelBox& l : ls) ++manifest.class_counts[l.class_label];
  write_manifest(manifest, opt.out_dir / "manifest.json");
  const double rate = seconds > 0.0 ? opt.count / seconds : 0.0;
  spdlog::info("diffusion_cp: {} images in {:.2f}s ({:.2f} img/s, {} in flight)", opt.count, seconds, rate,
               cfg.concurrency);
  if (stats) *stats = {seconds, rate};
  return manifest;
}

}  // namespace ocs
