#include "ocsynth/dataset/plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "ocsynth/error.hpp"
#include "ocsynth/util/rng.hpp"

namespace ocs {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Uniform k-subset without replacement, in original order.
std::vector<ManifestEntry> sample_entries(const std::vector<ManifestEntry>& entries, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(idx.size()) - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<ManifestEntry> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(entries[i]);
  return out;
}

std::string stem_for(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

void copy_into(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::create_directories(to.parent_path(), ec);
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot copy " + from.string() + " to " + to.string() + ": " + ec.message());
}

// Labels are stored normalised, so absolute coordinates carry representation
// error; micro-pixel snapping removes it without moving the normalised values.
double snap(double v) { return std::round(v * 1e6) / 1e6; }

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(TrainingScheme s) { return s == TrainingScheme::kSequential ? "sequential" : "mixed"; }

TrainingScheme parse_scheme(std::string_view name) {
  if (name == "sequential") return TrainingScheme::kSequential;
  if (name == "mixed") return TrainingScheme::kMixed;
  fail(ErrorCode::kInvalidArgument, "unknown training scheme '" + std::string(name) + "'");
}

std::size_t real_subset_size(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-7));
}

TrainingPlan assemble_training_plan(TrainingScheme scheme, const DatasetManifest& synthetic,
                                    const DatasetManifest& real, double real_fraction, std::uint64_t seed) {
  if (!(real_fraction > 0.0 && real_fraction <= 1.0))
    fail(ErrorCode::kInvalidArgument, "real fraction must be in (0, 1]");
  for (const ManifestEntry& e : synthetic.entries)
    if (e.source == SourceTag::kReal) fail(ErrorCode::kInvalidArgument, "synthetic manifest holds real entry " + e.image);
  for (const ManifestEntry& e : real.entries)
    if (e.source != SourceTag::kReal) fail(ErrorCode::kInvalidArgument, "real manifest holds synthetic entry " + e.image);
  const std::size_t k = real_subset_size(real.entries.size(), real_fraction);
  if (k == 0) fail(ErrorCode::kEmptyRealSubset, "real fraction selects no images");

  Rng rng(seed);
  DatasetManifest subset{real.split, real.method, seed, sample_entries(real.entries, k, rng), {}};
  TrainingPlan plan{scheme, real_fraction, seed, {}};
  if (scheme == TrainingScheme::kSequential) {
    DatasetManifest synth{synthetic.split, synthetic.method, synthetic.seed, synthetic.entries, {}};
    plan.stages.push_back({"synthetic", std::move(synth), {}});
    plan.stages.push_back({"real", std::move(subset), {}});
  } else {
    DatasetManifest mixed{synthetic.split, synthetic.method + "+real", seed, synthetic.entries, {}};
    mixed.entries.insert(mixed.entries.end(), subset.entries.begin(), subset.entries.end());
    rng.shuffle(std::span<ManifestEntry>(mixed.entries));
    plan.stages.push_back({"mixed", std::move(mixed), {}});
  }
  return plan;
}

DatasetManifest mix_synthetic_pair(const DatasetManifest& a, const DatasetManifest& b, std::size_t n,
                                   std::uint64_t seed) {
  Rng rng(seed);
  DatasetManifest out{a.split, a.method + "+" + b.method, seed, {}, {}};
  if (a.entries == b.entries) {
    if (n > a.entries.size()) fail(ErrorCode::kInsufficient, "requested more entries than the manifest holds");
    out.entries = sample_entries(a.entries, n, rng);
  } else {
    const std::size_t na = n / 2, nb = n - na;
    if (a.entries.size() < na || b.entries.size() < nb)
      fail(ErrorCode::kInsufficient, "each manifest must supply half of the requested entries");
    out.entries = sample_entries(a.entries, na, rng);
    const auto from_b = sample_entries(b.entries, nb, rng);
    out.entries.insert(out.entries.end(), from_b.begin(), from_b.end());
  }
  rng.shuffle(std::span<ManifestEntry>(out.entries));
  return out;
}

std::string plan_to_json(const TrainingPlan& plan) {
  json stages = json::array();
  for (const TrainingStage& s : plan.stages)
    stages.push_back({{"name", s.name}, {"params", s.params}, {"manifest", json::parse(manifest_to_json(s.manifest))}});
  return json{{"scheme", to_string(plan.scheme)},
              {"real_fraction", plan.real_fraction},
              {"seed", plan.seed},
              {"stages", stages}}
             .dump(2) +
         "\n";
}

TrainingPlan plan_from_json(std::string_view text) {
  const json j = parse_json(text, "training plan");
  TrainingPlan plan;
  try {
    plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
    plan.real_fraction = j.at("real_fraction").get<double>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const json& s : j.at("stages"))
      plan.stages.push_back({s.at("name").get<std::string>(), manifest_from_json(s.at("manifest").dump()),
                             s.at("params").get<std::map<std::string, std::string>>()});
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("training plan: ") + e.what());
  }
  if (plan.stages.empty()) fail(ErrorCode::kProtocolError, "training plan has no stages");
  return plan;
}

DatasetManifest rebase_manifest(const DatasetManifest& m, const fs::path& from, const fs::path& to) {
  DatasetManifest out = m;
  const fs::path base = fs::weakly_canonical(fs::absolute(to));
  auto rebase = [&](std::string& p) {
    if (fs::path(p).is_absolute()) return;
    p = fs::weakly_canonical(fs::absolute(from / p)).lexically_relative(base).generic_string();
  };
  for (ManifestEntry& e : out.entries) {
    rebase(e.image);
    rebase(e.label);
  }
  return out;
}

std::map<int, int> count_classes(const DatasetManifest& m, const fs::path& root) {
  std::map<int, int> counts;
  for (const ManifestEntry& e : m.entries)
    for (const LabelBox& l : parse_yolo_labels(read_text_file(root / e.label), e.width, e.height)) ++counts[l.class_label];
  return counts;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "yolo_dir") return ExportFormat::kYoloDir;
  if (name == "coco_json") return ExportFormat::kCocoJson;
  fail(ErrorCode::kInvalidArgument, "unknown export format '" + std::string(name) + "'");
}

void export_manifest(const DatasetManifest& m, const fs::path& root, ExportFormat format, const fs::path& out_dir) {
  validate_manifest(m, root);
  std::set<int> classes;
  for (const auto& [cls, n] : m.class_counts) classes.insert(cls);
  json names = json::object();
  for (int c : classes) names[std::to_string(c)] = "class_" + std::to_string(c);

  if (format == ExportFormat::kYoloDir) {
    json entries = json::array();
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
      const ManifestEntry& e = m.entries[i];
      const std::string image = "images/" + stem_for(i) + fs::path(e.image).extension().string();
      const std::string label = "labels/" + stem_for(i) + ".txt";
      copy_into(root / e.image, out_dir / image);
      copy_into(root / e.label, out_dir / label);
      entries.push_back({{"image", image},
                         {"label", label},
                         {"source", to_string(e.source)},
                         {"seed", e.seed},
                         {"width", e.width},
                         {"height", e.height}});
    }
    const std::string split = m.split.empty() ? "train" : m.split;
    const json index{{"path", "."},
                     {split, "images"},
                     {"nc", classes.size()},
                     {"names", names},
                     {"ocsynth", {{"split", m.split}, {"method", m.method}, {"seed", m.seed}, {"entries", entries}}}};
    write_text_file(out_dir / "dataset.yaml", index.dump(2) + "\n");
    return;
  }

  json images = json::array(), annotations = json::array(), categories = json::array();
  for (int c : classes) categories.push_back({{"id", c}, {"name", "class_" + std::to_string(c)}});
  long long ann_id = 1;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const ManifestEntry& e = m.entries[i];
    const std::string image = "images/" + stem_for(i) + fs::path(e.image).extension().string();
    copy_into(root / e.image, out_dir / image);
    const long long image_id = static_cast<long long>(i) + 1;
    images.push_back({{"id", image_id},
                      {"file_name", image},
                      {"width", e.width},
                      {"height", e.height},
                      {"source", to_string(e.source)},
                      {"seed", e.seed}});
    for (const LabelBox& l : parse_yolo_labels(read_text_file(root / e.label), e.width, e.height)) {
      const double x = snap(l.box.x_min), y = snap(l.box.y_min);
      const double w = snap(l.box.x_max - x), h = snap(l.box.y_max - y);
      annotations.push_back({{"id", ann_id++},
                             {"image_id", image_id},
                             {"category_id", l.class_label},
                             {"bbox", {x, y, w, h}},
                             {"area", w * h},
                             {"iscrowd", 0}});
    }
  }
  const json doc{{"info", {{"split", m.split}, {"method", m.method}, {"seed", m.seed}}},
                 {"images", images},
                 {"annotations", annotations},
                 {"categories", categories}};
  write_text_file(out_dir / "annotations.json", doc.dump(2) + "\n");
}

DatasetManifest import_manifest(const fs::path& dir, ExportFormat format) {
  DatasetManifest m;
  try {
    if (format == ExportFormat::kYoloDir) {
      const json index = parse_json(read_text_file(dir / "dataset.yaml"), "dataset index");
      const json& meta = index.at("ocsynth");
      m.split = meta.at("split").get<std::string>();
      m.method = meta.at("method").get<std::string>();
      m.seed = meta.at("seed").get<std::uint64_t>();
      json wrapped{{"entries", meta.at("entries")}};
      m.entries = manifest_from_json(wrapped.dump()).entries;
    } else {
      const json doc = parse_json(read_text_file(dir / "annotations.json"), "COCO annotations");
      const json& info = doc.at("info");
      m.split = info.at("split").get<std::string>();
      m.method = info.at("method").get<std::string>();
      m.seed = info.at("seed").get<std::uint64_t>();
      std::map<long long, std::vector<LabelBox>> labels;
      for (const json& a : doc.at("annotations")) {
        const auto b = a.at("bbox").get<std::array<double, 4>>();
        labels[a.at("image_id").get<long long>()].push_back(
            {a.at("category_id").get<int>(), {b[0], b[1], b[0] + b[2], b[1] + b[3]}});
      }
      for (const json& img : doc.at("images")) {
        ManifestEntry e;
        e.image = img.at("file_name").get<std::string>();
        e.label = "labels/" + fs::path(e.image).stem().string() + ".txt";
        const auto tag = parse_source_tag(img.at("source").get<std::string>());
        if (!tag) fail(ErrorCode::kProtocolError, "unknown source tag in COCO image record");
        e.source = *tag;
        e.seed = img.at("seed").get<std::uint64_t>();
        e.width = img.at("width").get<int>();
        e.height = img.at("height").get<int>();
        write_text_file(dir / e.label, format_yolo_labels(labels[img.at("id").get<long long>()], e.width, e.height));
        m.entries.push_back(std::move(e));
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("import: ") + e.what());
  }
  m.class_counts = count_classes(m, dir);
  return m;
}

}  // namespace ocs
