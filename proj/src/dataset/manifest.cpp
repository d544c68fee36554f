#include "ocsynth/dataset/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ocsynth/error.hpp"

namespace ocs {
namespace {

using nlohmann::json;

constexpr std::string_view kSourceNames[] = {"real", "cutpaste", "diffusion_cp", "3drp", "3dcp"};

}  // namespace

std::string_view to_string(SourceTag tag) { return kSourceNames[static_cast<int>(tag)]; }

std::optional<SourceTag> parse_source_tag(std::string_view name) {
  for (int i = 0; i < 5; ++i)
    if (kSourceNames[i] == name) return static_cast<SourceTag>(i);
  return std::nullopt;
}

std::string format_yolo_line(const LabelBox& l, int width, int height) {
  const double w = width, h = height;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", l.class_label, (l.box.x_min + l.box.x_max) / 2.0 / w,
                (l.box.y_min + l.box.y_max) / 2.0 / h, l.box.width() / w, l.box.height() / h);
  return buf;
}

std::string format_yolo_labels(std::span<const LabelBox> labels, int width, int height) {
  std::string out;
  for (const LabelBox& l : labels) {
    out += format_yolo_line(l, width, height);
    out += '\n';
  }
  return out;
}

std::vector<LabelBox> parse_yolo_labels(std::string_view text, int width, int height) {
  std::vector<LabelBox> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int cls;
    double cx, cy, w, h;
    if (!(ls >> cls >> cx >> cy >> w >> h) || w < 0 || h < 0)
      fail(ErrorCode::kProtocolError, "bad YOLO label on line " + std::to_string(lineno));
    std::string rest;
    if (ls >> rest) fail(ErrorCode::kProtocolError, "trailing fields on YOLO line " + std::to_string(lineno));
    out.push_back({cls, {(cx - w / 2) * width, (cy - h / 2) * height, (cx + w / 2) * width, (cy + h / 2) * height}});
  }
  return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["split"] = m.split;
  j["method"] = m.method;
  j["seed"] = m.seed;
  json entries = json::array();
  for (const ManifestEntry& e : m.entries) {
    entries.push_back({{"image", e.image},
                       {"label", e.label},
                       {"source", to_string(e.source)},
                       {"seed", e.seed},
                       {"width", e.width},
                       {"height", e.height}});
  }
  j["entries"] = std::move(entries);
  json counts = json::object();
  for (const auto& [cls, n] : m.class_counts) counts[std::to_string(cls)] = n;
  j["class_counts"] = std::move(counts);
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(std::string_view text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    m.split = j.value("split", "");
    m.method = j.value("method", "");
    m.seed = j.value("seed", std::uint64_t{0});
    for (const json& e : j.at("entries")) {
      ManifestEntry entry;
      entry.image = e.at("image").get<std::string>();
      entry.label = e.at("label").get<std::string>();
      const auto tag = parse_source_tag(e.at("source").get<std::string>());
      if (!tag) fail(ErrorCode::kProtocolError, "unknown source tag " + e.at("source").get<std::string>());
      entry.source = *tag;
      entry.seed = e.value("seed", std::uint64_t{0});
      entry.width = e.at("width").get<int>();
      entry.height = e.at("height").get<int>();
      m.entries.push_back(std::move(entry));
    }
    if (j.contains("class_counts"))
      for (const auto& [k, v] : j.at("class_counts").items()) m.class_counts[std::stoi(k)] = v.get<int>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("manifest: ") + e.what());
  }
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::kIoFailure, "short write to " + path.string());
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, manifest_to_json(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(read_text_file(path)); }

void validate_manifest(const DatasetManifest& m, const std::filesystem::path& root) {
  std::map<int, int> counts;
  for (const ManifestEntry& e : m.entries) {
    const auto image = root / e.image;
    const auto label = root / e.label;
    if (!std::filesystem::exists(image)) fail(ErrorCode::kIoFailure, "missing image " + image.string());
    if (!std::filesystem::exists(label)) fail(ErrorCode::kIoFailure, "missing label " + label.string());
    for (const LabelBox& l : parse_yolo_labels(read_text_file(label), e.width, e.height)) ++counts[l.class_label];
  }
  if (counts != m.class_counts) fail(ErrorCode::kProtocolError, "class_counts disagree with label files");
}

}  // namespace ocs
