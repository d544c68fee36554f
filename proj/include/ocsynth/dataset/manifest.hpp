#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocsynth/bbox.hpp"

namespace ocs {

enum class SourceTag { kReal, kCutPaste, kDiffusionCp, k3dRp, k3dCp };

std::string_view to_string(SourceTag tag);
std::optional<SourceTag> parse_source_tag(std::string_view name);

struct LabelBox {
  int class_label = 0;
  BBox box;

  bool operator==(const LabelBox&) const = default;
};

// Paths are relative to the manifest's directory unless absolute.
struct ManifestEntry {
  std::string image;
  std::string label;
  SourceTag source = SourceTag::kReal;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::string split;   // "train", "val", "test", or empty
  std::string method;  // producing pipeline, free-form
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::map<int, int> class_counts;

  bool operator==(const DatasetManifest&) const = default;
};

// "class cx cy w h" per line, normalised to the frame, six decimals.
std::string format_yolo_line(const LabelBox& label, int width, int height);
std::string format_yolo_labels(std::span<const LabelBox> labels, int width, int height);
// Throws ProtocolError on malformed lines.
std::vector<LabelBox> parse_yolo_labels(std::string_view text, int width, int height);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Re-reads every label file under `root` and checks that files exist and that
// class_counts match. Throws IoFailure or ProtocolError.
void validate_manifest(const DatasetManifest& manifest, const std::filesystem::path& root);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ocs
