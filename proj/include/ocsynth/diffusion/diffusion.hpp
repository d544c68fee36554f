#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocsynth/compositor/compositor.hpp"
#include "ocsynth/imaging/filter.hpp"
#include "ocsynth/imaging/harmonize.hpp"

namespace ocs {

struct ServiceOptions {
  double timeout_s = 120.0;
  int retries = 3;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;
};

struct DiffusionConfig {
  CannyParams canny;
  int edge_dilation = 3;  // edges farther than this from any object are dropped
  std::string prompt;
  std::string negative_prompt;
  int steps = 6;
  double guidance = 1.5;
  ServiceOptions service;
  int concurrency = 4;
  int feather_band = 2;
  double feather_sigma = 1.0;
  int ring_width = 8;
};

struct ConditioningPayload {
  Mask edge_map;
  Image reference_background;
  std::string positive_prompt;
  std::string negative_prompt;
  std::uint64_t seed = 0;
  int steps = 1;
  double guidance = 0.0;
  int width = 0;
  int height = 0;
};

inline constexpr std::uint8_t kBlankCanvasGray = 128;

// Layout pasted (direct) onto a uniform mid-gray canvas.
Image blank_canvas_composite(const LayoutSpec& layout, const std::vector<Cutout>& transformed);

ConditioningPayload build_conditioning(const LayoutSpec& layout, const std::vector<Cutout>& transformed,
                                       const Image& reference_background, const DiffusionConfig& config,
                                       std::uint64_t seed);

// Request body of POST /generate. Keys are emitted in sorted order so equal
// payloads serialise to equal bytes.
std::string payload_to_json(const ConditioningPayload& payload);

struct GenerationResult {
  Image image;
  double latency_ms = 0.0;
  std::uint64_t seed_echo = 0;
  int retries = 0;
};

// `endpoint` is "http://host:port" with an optional path prefix. Retries 5xx,
// connection failures and timeouts with exponential backoff; 4xx raises
// ServiceRejection at once and a malformed or wrong-sized reply raises
// ProtocolError. When retries run out the last failure is raised as Timeout
// or ServiceUnavailable.
GenerationResult request_generation(const std::string& endpoint, const ConditioningPayload& payload,
                                    const ServiceOptions& options);

struct FinalComposite {
  Image image;
  AnnotationSet annotations;
  std::vector<Mask> regions;           // harmonized visible region per placement; empty if skipped
  std::vector<LabTransform> transforms;  // per placement; identity if skipped
};

// Pastes the layout over `generated` with a narrow feathered edge, then
// harmonizes each object's visible region against its surrounding ring.
FinalComposite composite_final(const Image& generated, const LayoutSpec& layout, const AssetStore& assets,
                               const std::vector<Cutout>& transformed, const DiffusionConfig& config);

DatasetManifest generate_diffusion_dataset(const AssetStore& assets, const CompositorConfig& layout_config,
                                           const DiffusionConfig& config, const std::string& endpoint,
                                           std::uint64_t seed, const GenerationOptions& options,
                                           GenerationStats* stats = nullptr);

}  // namespace ocs
