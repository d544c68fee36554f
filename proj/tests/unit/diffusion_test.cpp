#include <chrono>
#include <filesystem>

#include "doctest.h"
#include "ocsynth/diffusion/diffusion.hpp"
#include "ocsynth/diffusion/mock_service.hpp"
#include "ocsynth/imaging/cutout.hpp"
#include "ocsynth/imaging/io.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace ocs;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an ocs::Error");
  return ErrorCode::kInvalidArgument;
}

CompositorConfig layout_config() {
  CompositorConfig cfg;
  cfg.frame_width = 128;
  cfg.frame_height = 96;
  cfg.min_frac = 0.15;
  cfg.max_frac = 0.4;
  cfg.min_visible_px = 80;
  cfg.max_objects = 4;
  return cfg;
}

DiffusionConfig fast_config() {
  DiffusionConfig cfg;
  cfg.prompt = "a cluttered kitchen table";
  cfg.negative_prompt = "blurry";
  cfg.service.timeout_s = 5.0;
  cfg.service.backoff_base_s = 0.01;
  return cfg;
}

ConditioningPayload small_payload() {
  ConditioningPayload p;
  p.width = 16;
  p.height = 12;
  p.edge_map = Mask(16, 12);
  p.reference_background = synth::smooth_background(16, 12, 3);
  p.seed = 77;
  p.steps = 4;
  p.guidance = 2.0;
  return p;
}

// Chebyshev distance <= r to some set pixel, by direct search.
bool near_mask(const Mask& m, int x, int y, int r) {
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (m.contains(x + dx, y + dy) && m.at(x + dx, y + dy)) return true;
  return false;
}

// Pixels whose whole (2r+1)^2 neighbourhood lies inside the mask, treating
// everything beyond the cutout as background.
Mask padded_core(const Mask& m, int r) {
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy)
        for (int dx = -r; dx <= r && all; ++dx) all = m.contains(x + dx, y + dy) && m.at(x + dx, y + dy);
      out.at(x, y) = all;
    }
  return out;
}

}  // namespace

TEST_CASE("build_conditioning") {
  const AssetStore assets = synth::asset_store(21, 5, 2, 2, 160, 120);
  const DiffusionConfig cfg = fast_config();

  SUBCASE("empty layout gives an empty edge map") {
    LayoutSpec empty{0, 128, 96, 0, {}};
    const auto p = build_conditioning(empty, {}, assets.backgrounds[0], cfg, 1);
    CHECK(p.edge_map.none());
    CHECK(p.width == 128);
  }

  SUBCASE("edges stay within three pixels of the objects") {
    Image img(30, 30, 3, 250);
    const Cutout bright = extract_cutout(img, synth::rect_mask(30, 30, 0, 0, 30, 30), 0, "b");
    LayoutSpec l{0, 128, 96, 0, {{false, 0, 40, 30, 0.0, 1.0, BlendMode::kDirect, 0}}};
    const std::vector<Cutout> t{bright};
    const auto p = build_conditioning(l, t, assets.backgrounds[0], cfg, 1);
    Mask placed(128, 96);
    for (int y = 30; y < 60; ++y)
      for (int x = 40; x < 70; ++x) placed.at(x, y) = 1;
    CHECK(p.edge_map.count() > 60);
    for (int y = 0; y < 96; ++y)
      for (int x = 0; x < 128; ++x)
        if (p.edge_map.at(x, y)) CHECK(near_mask(placed, x, y, 3));
  }

  SUBCASE("random layouts: edges inside the dilated union, payload bytes stable") {
    const CompositorConfig lc = layout_config();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::vector<Cutout> t;
      const LayoutSpec l = sample_layout(seed, assets.targets, assets.distractors, assets.backgrounds[0], lc, &t);
      const auto a = build_conditioning(l, t, layout_background(l, assets), cfg, seed);
      const auto b = build_conditioning(l, t, layout_background(l, assets), cfg, seed);
      CHECK(payload_to_json(a) == payload_to_json(b));
      Mask uni(l.width, l.height);
      for (std::size_t i = 0; i < t.size(); ++i)
        for (int y = 0; y < t[i].mask.height(); ++y)
          for (int x = 0; x < t[i].mask.width(); ++x)
            if (t[i].mask.at(x, y) && uni.contains(x + l.placements[i].x, y + l.placements[i].y))
              uni.at(x + l.placements[i].x, y + l.placements[i].y) = 1;
      for (int y = 0; y < l.height; ++y)
        for (int x = 0; x < l.width; ++x)
          if (a.edge_map.at(x, y)) REQUIRE(near_mask(uni, x, y, 3));
    }
  }
}

TEST_CASE("request_generation against the mock service") {
  const ServiceOptions opt{5.0, 3, 0.01, 2.0};

  SUBCASE("fixed image comes back byte for byte") {
    const Image fixture = io::read_image(fs::path(OCSYNTH_FIXTURE_DIR) / "mock" / "generated_16x12.png");
    MockDiffusionService svc({.fixed_image = fixture});
    svc.start();
    const auto r = request_generation(svc.endpoint(), small_payload(), opt);
    CHECK(r.image == fixture);
    CHECK(r.seed_echo == 77);
    CHECK(r.retries == 0);
  }

  SUBCASE("two transient failures then success") {
    MockDiffusionService svc({.fail_first = 2});
    svc.start();
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = request_generation(svc.endpoint(), small_payload(), opt);
    const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.retries == 2);
    CHECK(svc.requests() == 3);
    CHECK(waited >= 0.01 + 0.02);
    CHECK(r.image.width() == 16);
  }

  SUBCASE("retries exhausted") {
    MockDiffusionService svc({.fail_first = 10});
    svc.start();
    CHECK(code_of([&] { request_generation(svc.endpoint(), small_payload(), {5.0, 2, 0.001, 2.0}); }) ==
          ErrorCode::kServiceUnavailable);
    CHECK(svc.requests() == 3);
  }

  SUBCASE("wrong resolution is a protocol error") {
    MockDiffusionService svc({.wrong_resolution = true});
    svc.start();
    CHECK(code_of([&] { request_generation(svc.endpoint(), small_payload(), opt); }) == ErrorCode::kProtocolError);
    CHECK(svc.requests() == 1);
  }

  SUBCASE("non-JSON body is a protocol error") {
    MockDiffusionService svc({.malformed = true});
    svc.start();
    CHECK(code_of([&] { request_generation(svc.endpoint(), small_payload(), opt); }) == ErrorCode::kProtocolError);
  }

  SUBCASE("4xx is rejected without retrying") {
    MockDiffusionService svc;
    svc.start();
    ConditioningPayload bad = small_payload();
    bad.steps = 0;
    CHECK(code_of([&] { request_generation(svc.endpoint(), bad, opt); }) == ErrorCode::kServiceRejection);
    CHECK(svc.requests() == 1);
    svc.set_behavior({.status_override = 422});
    CHECK(code_of([&] { request_generation(svc.endpoint(), small_payload(), opt); }) == ErrorCode::kServiceRejection);
    CHECK(svc.requests() == 2);
  }

  SUBCASE("slow service times out after retries") {
    MockDiffusionService svc({.delay_ms = 400});
    svc.start();
    CHECK(code_of([&] { request_generation(svc.endpoint(), small_payload(), {0.1, 1, 0.001, 2.0}); }) ==
          ErrorCode::kTimeout);
    CHECK(svc.requests() >= 1);
  }

  SUBCASE("unreachable endpoint") {
    MockDiffusionService svc;
    svc.start();
    const std::string ep = svc.endpoint();
    svc.stop();
    const ErrorCode c = code_of([&] { request_generation(ep, small_payload(), {0.5, 1, 0.001, 2.0}); });
    CHECK((c == ErrorCode::kServiceUnavailable || c == ErrorCode::kTimeout));
  }

  SUBCASE("endpoint must be http") {
    CHECK(code_of([&] { request_generation("ftp://x", small_payload(), opt); }) == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("composite_final") {
  const AssetStore assets = synth::asset_store(31, 6, 2, 3, 160, 120);
  const CompositorConfig lc = layout_config();
  const DiffusionConfig cfg = fast_config();

  SUBCASE("annotations equal the compositor's for 100 layouts") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::vector<Cutout> t;
      LayoutSpec l = sample_layout(seed, assets.targets, assets.distractors, assets.backgrounds[0], lc, &t);
      l.background = static_cast<int>(seed % 3);
      const Image generated = synth::smooth_background(l.width, l.height, seed + 500);
      const auto fin = composite_final(generated, l, assets, t, cfg);
      const auto ref = render_composite(l, assets, t).annotations;
      REQUIRE(fin.annotations.entries.size() == ref.entries.size());
      for (std::size_t k = 0; k < ref.entries.size(); ++k) {
        CHECK(fin.annotations.entries[k].box == ref.entries[k].box);
        CHECK(fin.annotations.entries[k].class_label == ref.entries[k].class_label);
        CHECK(fin.annotations.entries[k].instance_id == ref.entries[k].instance_id);
        CHECK(fin.annotations.entries[k].occlusion == ref.entries[k].occlusion);
      }
    }
  }

  SUBCASE("locality and interior identity") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<Cutout> t;
      const LayoutSpec l = sample_layout(seed, assets.targets, assets.distractors, assets.backgrounds[0], lc, &t);
      const Image generated =
          seed % 2 ? synth::smooth_background(l.width, l.height, seed) : blank_canvas_composite(l, t);
      const auto fin = composite_final(generated, l, assets, t, cfg);
      Mask uni(l.width, l.height);
      for (std::size_t i = 0; i < t.size(); ++i) {
        const Placement2D& p = l.placements[i];
        const Mask core = padded_core(t[i].mask, cfg.feather_band);
        for (int y = 0; y < t[i].mask.height(); ++y) {
          for (int x = 0; x < t[i].mask.width(); ++x) {
            const int fx = x + p.x, fy = y + p.y;
            if (!uni.contains(fx, fy)) continue;
            if (t[i].mask.at(x, y)) uni.at(fx, fy) = 1;
            if (!core.at(x, y) || !fin.regions[i].at(fx, fy)) continue;
            const auto* src = t[i].image.row(y) + 4 * x;
            const auto want = fin.transforms[i].apply(src[0], src[1], src[2]);
            for (int c = 0; c < 3; ++c) REQUIRE(fin.image.at(fx, fy, c) == want[c]);
          }
        }
      }
      for (int y = 0; y < l.height; ++y)
        for (int x = 0; x < l.width; ++x)
          if (!uni.at(x, y))
            for (int c = 0; c < 3; ++c) REQUIRE(fin.image.at(x, y, c) == generated.at(x, y, c));
    }
  }

  SUBCASE("generated frame must match the layout") {
    LayoutSpec l{0, 128, 96, 0, {}};
    CHECK(code_of([&] { composite_final(Image(64, 96, 3), l, assets, {}, cfg); }) == ErrorCode::kDimensionMismatch);
  }
}

TEST_CASE("generate_diffusion_dataset") {
  const AssetStore assets = synth::asset_store(41, 4, 1, 2, 160, 120);
  const CompositorConfig lc = layout_config();
  DiffusionConfig cfg = fast_config();
  cfg.concurrency = 2;
  MockDiffusionService svc;
  svc.start();
  std::vector<std::string> labels[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = fs::temp_directory_path() / ("ocsynth_test_diff_" + std::to_string(run));
    fs::remove_all(dir);
    const auto m = generate_diffusion_dataset(assets, lc, cfg, svc.endpoint(), 9, {6, 1, dir});
    REQUIRE(m.entries.size() == 6);
    validate_manifest(m, dir);
    for (const auto& e : m.entries) {
      CHECK(e.source == SourceTag::kDiffusionCp);
      labels[run].push_back(read_text_file(dir / e.label) + read_text_file(dir / e.image));
    }
  }
  CHECK(labels[0] == labels[1]);
  CHECK(svc.requests() == 12);
}
