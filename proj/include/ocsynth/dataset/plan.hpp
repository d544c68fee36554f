#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ocsynth/dataset/manifest.hpp"

namespace ocs {

enum class TrainingScheme { kSequential, kMixed };

std::string_view to_string(TrainingScheme scheme);
TrainingScheme parse_scheme(std::string_view name);  // throws InvalidArgument

struct TrainingStage {
  std::string name;
  DatasetManifest manifest;
  std::map<std::string, std::string> params;  // passed through to the trainer

  bool operator==(const TrainingStage&) const = default;
};

struct TrainingPlan {
  TrainingScheme scheme = TrainingScheme::kSequential;
  double real_fraction = 1.0;
  std::uint64_t seed = 0;
  std::vector<TrainingStage> stages;

  bool operator==(const TrainingPlan&) const = default;
};

// floor(fraction * n), robust to representation error in the fraction.
std::size_t real_subset_size(std::size_t n, double fraction);

// Entry paths must already share one root. Stage manifests carry no
// class_counts; recount them against that root before validating.
TrainingPlan assemble_training_plan(TrainingScheme scheme, const DatasetManifest& synthetic,
                                    const DatasetManifest& real, double real_fraction, std::uint64_t seed);

// floor(n/2) entries from `a` and the rest from `b`, shuffled together. When
// both manifests hold the same entries, n are drawn from `a` without repeats.
DatasetManifest mix_synthetic_pair(const DatasetManifest& a, const DatasetManifest& b, std::size_t n,
                                   std::uint64_t seed);

std::string plan_to_json(const TrainingPlan& plan);
TrainingPlan plan_from_json(std::string_view text);

// Rewrites entry paths relative to `from` so they resolve from `to`.
DatasetManifest rebase_manifest(const DatasetManifest& manifest, const std::filesystem::path& from,
                                const std::filesystem::path& to);
std::map<int, int> count_classes(const DatasetManifest& manifest, const std::filesystem::path& root);

enum class ExportFormat { kYoloDir, kCocoJson };

ExportFormat parse_export_format(std::string_view name);

// yolo_dir: images/, labels/ and dataset.yaml (a JSON document, hence valid
// YAML). coco_json: images/ and annotations.json with absolute x,y,w,h boxes.
// Files are renamed to a zero-padded entry index.
void export_manifest(const DatasetManifest& manifest, const std::filesystem::path& root, ExportFormat format,
                     const std::filesystem::path& out_dir);
// Returns a manifest rooted at `dir`; COCO import writes labels/ from the
// annotation records.
DatasetManifest import_manifest(const std::filesystem::path& dir, ExportFormat format);

}  // namespace ocs
