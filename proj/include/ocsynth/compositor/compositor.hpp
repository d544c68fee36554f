#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ocsynth/bbox.hpp"
#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/image.hpp"
#include "ocsynth/imaging/blend.hpp"

namespace ocs {

struct CompositorConfig {
  int frame_width = 512;  // 0 keeps the background's own size
  int frame_height = 512;
  int min_objects = 1;
  int max_objects = 6;
  int max_distractors = 2;
  double rotation_min = -30.0;  // degrees
  double rotation_max = 30.0;
  // Pasted width (before rotation) as a fraction of frame width.
  double min_frac = 0.08;
  double max_frac = 0.3;
  double max_occlusion = 0.5;
  int min_visible_px = 400;
  int max_attempts = 50;
  std::vector<BlendMode> blend_modes{BlendMode::kDirect, BlendMode::kFeathered, BlendMode::kGradientDomain};
  BlendParams blend;

  // Throws InvalidArgument.
  void validate() const;
};

struct Placement2D {
  bool distractor = false;
  int asset = 0;  // index into targets or distractors
  int x = 0;      // top-left of the transformed cutout
  int y = 0;
  double rotation = 0.0;
  double scale = 1.0;
  BlendMode blend = BlendMode::kDirect;
  int z_order = 0;

  bool operator==(const Placement2D&) const = default;
};

struct LayoutSpec {
  int background = 0;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  std::vector<Placement2D> placements;  // ascending z_order

  bool operator==(const LayoutSpec&) const = default;
};

std::string layout_to_json(const LayoutSpec& layout);

struct Annotation {
  int class_label = 0;
  BBox box;
  std::string instance_id;
  double occlusion = 0.0;
  int z_order = 0;
};

struct AnnotationSet {
  std::string image;
  int width = 0;
  int height = 0;
  std::vector<Annotation> entries;       // targets only
  std::vector<double> object_occlusion;  // every placement, by z_order
  double frame_occlusion = 0.0;          // occlusion_fraction of all pasted masks
};

std::vector<LabelBox> to_labels(const AnnotationSet& annotations);

struct AssetStore {
  std::vector<Cutout> targets;
  std::vector<Cutout> distractors;
  std::vector<Image> backgrounds;  // RGB
  std::vector<std::string> background_names;
};

// Targets live under `<dir>/<class index>/`, one object per file: either an
// RGBA PNG or an RGB image beside `<stem>.mask.png`. Distractors use the same
// file convention in a flat or nested directory; their class is ignored.
std::vector<Cutout> load_cutouts(const std::filesystem::path& dir, bool with_classes);
std::vector<Image> load_backgrounds(const std::filesystem::path& dir, std::vector<std::string>* names = nullptr);

// Draws a layout whose constraints hold by construction. `transformed`, when
// given, receives the transformed cutout of each placement.
LayoutSpec sample_layout(std::uint64_t seed, const std::vector<Cutout>& targets,
                         const std::vector<Cutout>& distractors, const Image& background,
                         const CompositorConfig& config, std::vector<Cutout>* transformed = nullptr);

std::vector<Cutout> transformed_cutouts(const LayoutSpec& layout, const AssetStore& assets);

// Boxes, occlusion and identity for an already-transformed layout; shared by
// every paste-based pipeline so their annotations agree.
AnnotationSet annotate_layout(const LayoutSpec& layout, const AssetStore& assets,
                              const std::vector<Cutout>& transformed);

struct Composite {
  Image image;
  AnnotationSet annotations;
};

Composite render_composite(const LayoutSpec& layout, const AssetStore& assets, const BlendParams& params = {});
Composite render_composite(const LayoutSpec& layout, const AssetStore& assets,
                           const std::vector<Cutout>& transformed, const BlendParams& params = {});

// Background scaled to the layout frame.
Image layout_background(const LayoutSpec& layout, const AssetStore& assets);

struct GenerationOptions {
  int count = 0;
  int workers = 1;
  std::filesystem::path out_dir;
};

struct GenerationStats {
  double seconds = 0.0;
  double images_per_second = 0.0;
};

// Writes images/NNNNNN.png, labels/NNNNNN.txt and manifest.json under out_dir.
DatasetManifest generate_cutpaste_dataset(const AssetStore& assets, const CompositorConfig& config,
                                          std::uint64_t seed, const GenerationOptions& options,
                                          GenerationStats* stats = nullptr);

}  // namespace ocs
