#include "ocsynth/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ocsynth/error.hpp"
#include "ocsynth/imaging/io.hpp"
#include "ocsynth/imaging/occlusion.hpp"

namespace ocs {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

EvalSet subset(const EvalSet& set, const std::vector<char>& keep) {
  EvalSet out;
  out.images = set.images;
  for (const auto& g : set.ground_truth)
    if (keep[g.image]) out.ground_truth.push_back(g);
  for (const auto& d : set.detections)
    if (keep[d.image]) out.detections.push_back(d);
  return out;
}

std::optional<double> mean_ap(const std::map<int, ClassMatches>& matches, ApMethod method,
                              std::map<int, ClassReport>* classes) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [cls, m] : matches) {
    ClassReport r{0.0, m.num_gt, static_cast<int>(m.outcomes.size()), m.tp, m.fp, m.fn};
    if (m.num_gt > 0) {
      r.ap = average_precision(m, method);
      sum += r.ap;
      ++n;
    }
    if (classes) (*classes)[cls] = r;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

int image_by_stem(const EvalSet& set, const std::string& stem) {
  for (std::size_t i = 0; i < set.images.size(); ++i)
    if (set.images[i].name == stem) return static_cast<int>(i);
  return -1;
}

}  // namespace

void EvalSet::validate(double mask_tol) const {
  const int n = static_cast<int>(images.size());
  for (const auto& im : images)
    if (im.width <= 0 || im.height <= 0) fail(ErrorCode::kInvalidArgument, "image " + im.name + " has no size");
  for (const auto& g : ground_truth) {
    if (g.image < 0 || g.image >= n) fail(ErrorCode::kInvalidArgument, "ground truth refers to a missing image");
    if (!g.box.valid()) fail(ErrorCode::kInvalidArgument, "ground truth box is empty");
    if (g.mask) {
      const EvalImage& im = images[g.image];
      if (g.mask->width() != im.width || g.mask->height() != im.height)
        fail(ErrorCode::kInvalidArgument, "ground truth mask is not frame-sized");
      const auto t = g.mask->tight_box();
      if (!t || std::fabs(t->x0 - g.box.x_min) > mask_tol || std::fabs(t->y0 - g.box.y_min) > mask_tol ||
          std::fabs(t->x1 - g.box.x_max) > mask_tol || std::fabs(t->y1 - g.box.y_max) > mask_tol)
        fail(ErrorCode::kInvalidArgument, "ground truth mask does not match its box in " + im.name);
    }
  }
  for (const auto& d : detections) {
    if (d.image < 0 || d.image >= n) fail(ErrorCode::kInvalidArgument, "detection refers to a missing image");
    if (!d.box.valid()) fail(ErrorCode::kInvalidArgument, "detection box is empty");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) fail(ErrorCode::kInvalidArgument, "confidence outside [0, 1]");
  }
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::map<int, ClassMatches> match_detections(const std::vector<Detection>& dets,
                                             const std::vector<GroundTruthEntry>& gts, double thresh) {
  std::map<int, ClassMatches> out;
  std::map<std::pair<int, int>, std::vector<int>> by_image;  // (class, image) -> gt indices
  for (std::size_t g = 0; g < gts.size(); ++g) {
    ++out[gts[g].class_label].num_gt;
    by_image[{gts[g].class_label, gts[g].image}].push_back(static_cast<int>(g));
  }
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dets[a].confidence > dets[b].confidence; });
  std::vector<char> used(gts.size(), 0);
  for (int d : order) {
    const Detection& det = dets[d];
    ClassMatches& m = out[det.class_label];
    int best = -1;
    double best_iou = thresh;
    if (auto it = by_image.find({det.class_label, det.image}); it != by_image.end()) {
      for (int g : it->second) {
        if (used[g]) continue;
        const double v = iou(det.box, gts[g].box);
        if (v >= best_iou && (best < 0 || v > best_iou)) {
          best = g;
          best_iou = v;
        }
      }
    }
    if (best >= 0) {
      used[best] = 1;
      ++m.tp;
    } else {
      ++m.fp;
    }
    m.outcomes.push_back({d, det.confidence, best});
  }
  for (auto& [cls, m] : out) m.fn = m.num_gt - m.tp;
  return out;
}

double average_precision(const ClassMatches& m, ApMethod method) {
  if (m.num_gt <= 0) fail(ErrorCode::kNoGroundTruth, "average precision needs ground truth");
  const std::size_t n = m.outcomes.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (m.outcomes[k].gt >= 0) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(m.num_gt);
  }
  // Envelope: best precision at this recall or beyond.
  std::vector<double> envelope(precision);
  for (std::size_t k = n; k-- > 1;) envelope[k - 1] = std::max(envelope[k - 1], envelope[k]);

  if (method == ApMethod::kEnvelope) {
    double ap = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      ap += (recall[k] - prev) * envelope[k];
      prev = recall[k];
    }
    return ap;
  }
  double sum = 0.0;
  std::size_t k = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    while (k < n && recall[k] < r) ++k;
    if (k < n) sum += envelope[k];
  }
  return sum / 101.0;
}

void EvalConfig::validate() const {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) fail(ErrorCode::kInvalidArgument, "IoU threshold must be in (0, 1]");
  if (bin_edges.empty()) fail(ErrorCode::kInvalidArgument, "at least one occlusion bin edge is needed");
  for (std::size_t i = 0; i < bin_edges.size(); ++i)
    if (!(bin_edges[i] > (i ? bin_edges[i - 1] : 0.0)) || !std::isfinite(bin_edges[i]))
      fail(ErrorCode::kInvalidArgument, "occlusion bin edges must be positive and increasing");
}

double image_occlusion(const EvalSet& set, int image, bool* used_masks) {
  std::vector<const GroundTruthEntry*> gts;
  for (const auto& g : set.ground_truth)
    if (g.image == image) gts.push_back(&g);
  const bool masks = !gts.empty() && std::all_of(gts.begin(), gts.end(), [](auto* g) { return g->mask.has_value(); });
  if (used_masks) *used_masks = masks;
  if (gts.empty()) return 0.0;
  const EvalImage& im = set.images[image];
  std::vector<Mask> raster;
  raster.reserve(gts.size());
  for (const auto* g : gts)
    raster.push_back(masks ? *g->mask : box_mask(im.width, im.height, g->box.x_min, g->box.y_min, g->box.x_max, g->box.y_max));
  try {
    return occlusion_fraction(raster);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyInput) return 0.0;  // sub-pixel boxes rasterise to nothing
    throw;
  }
}

int occlusion_bin(double fraction, const std::vector<double>& edges) {
  if (fraction <= 0.0) return 0;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (fraction <= edges[i] / 100.0) return static_cast<int>(i) + 1;
  return static_cast<int>(edges.size()) + 1;
}

std::vector<std::string> bin_labels(const std::vector<double>& edges) {
  std::vector<std::string> out{"0"};
  double prev = 0.0;
  for (double e : edges) {
    out.push_back(format_number(prev) + "-" + format_number(e));
    prev = e;
  }
  const double step = edges.size() > 1 ? edges.back() - edges[edges.size() - 2] : edges.back();
  out.push_back(format_number(edges.back()) + "-" + format_number(edges.back() + step) + "+");
  return out;
}

EvalReport evaluate(const EvalSet& set, const EvalConfig& cfg) {
  cfg.validate();
  set.validate();
  EvalReport r;
  r.map = mean_ap(match_detections(set.detections, set.ground_truth, cfg.iou_thresh), cfg.method, &r.classes);

  const int nbins = static_cast<int>(cfg.bin_edges.size()) + 2;
  std::vector<int> bin_of(set.images.size());
  int with_masks = 0, with_boxes = 0;
  std::vector<char> has_gt(set.images.size(), 0);
  for (const auto& g : set.ground_truth) has_gt[g.image] = 1;
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    bool masks = false;
    r.image_occlusion.push_back(image_occlusion(set, static_cast<int>(i), &masks));
    if (has_gt[i]) ++(masks ? with_masks : with_boxes);
    bin_of[i] = occlusion_bin(r.image_occlusion.back(), cfg.bin_edges);
  }
  r.occlusion_source = with_masks && with_boxes ? "mixed" : with_masks ? "mask" : "box";

  const auto labels = bin_labels(cfg.bin_edges);
  for (int b = 0; b < nbins; ++b) {
    BinReport br;
    br.label = labels[b];
    br.lo = b == 0 ? 0.0 : b == 1 ? 0.0 : cfg.bin_edges[b - 2];
    br.hi = b == 0 ? 0.0 : b <= static_cast<int>(cfg.bin_edges.size()) ? cfg.bin_edges[b - 1]
                                                                         : std::numeric_limits<double>::infinity();
    std::vector<char> keep(set.images.size(), 0);
    for (std::size_t i = 0; i < set.images.size(); ++i)
      if (bin_of[i] == b) {
        keep[i] = 1;
        ++br.images;
      }
    if (br.images > 0) {
      const EvalSet sub = subset(set, keep);
      br.map = mean_ap(match_detections(sub.detections, sub.ground_truth, cfg.iou_thresh), cfg.method, nullptr);
    }
    r.bins.push_back(br);
  }
  return r;
}

std::vector<double> parse_bin_edges(std::string_view text) {
  std::vector<double> edges;
  std::stringstream ss{std::string(text)};
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) fail(ErrorCode::kInvalidArgument, "bad bin edge '" + part + "'");
    edges.push_back(v);
  }
  if (!edges.empty() && edges.front() == 0.0) edges.erase(edges.begin());
  EvalConfig cfg;
  cfg.bin_edges = edges;
  cfg.validate();
  return edges;
}

std::string report_to_json(const EvalReport& r) {
  json classes = json::object();
  for (const auto& [cls, c] : r.classes) {
    json jc{{"num_gt", c.num_gt}, {"num_det", c.num_det}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
    jc["ap50"] = c.num_gt > 0 ? json(c.ap) : json(nullptr);
    classes[std::to_string(cls)] = jc;
  }
  json bins = json::array();
  for (const BinReport& b : r.bins) {
    json jb{{"label", b.label}, {"lo", b.lo}, {"images", b.images}};
    jb["hi"] = std::isfinite(b.hi) ? json(b.hi) : json(nullptr);
    if (b.map) jb["map50"] = *b.map;
    bins.push_back(jb);
  }
  json j{{"classes", classes}, {"bins", bins}, {"occlusion_source", r.occlusion_source}, {"image_occlusion", r.image_occlusion}};
  j["map50"] = r.map ? json(*r.map) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string report_table(const EvalReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %8s %6s %6s %6s %6s %6s\n", "class", "AP@50", "GT", "det", "TP", "FP", "FN");
  out += buf;
  for (const auto& [cls, c] : r.classes) {
    const std::string ap = c.num_gt > 0 ? format_number(std::round(c.ap * 1e4) / 1e4) : "-";
    std::snprintf(buf, sizeof buf, "%-8d %8s %6d %6d %6d %6d %6d\n", cls, ap.c_str(), c.num_gt, c.num_det, c.tp, c.fp, c.fn);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-8s %8.4f\n\n", "mAP@50", r.map.value_or(0.0));
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s %6s %8s   (occlusion from %s)\n", "occlusion %", "images", "mAP@50",
                r.occlusion_source.c_str());
  out += buf;
  for (const BinReport& b : r.bins) {
    const std::string m = b.map ? format_number(std::round(*b.map * 1e4) / 1e4) : "-";
    std::snprintf(buf, sizeof buf, "%-12s %6d %8s\n", b.label.c_str(), b.images, m.c_str());
    out += buf;
  }
  return out;
}

EvalSet load_ground_truth(const DatasetManifest& manifest, const fs::path& root,
                          const std::optional<fs::path>& masks_dir) {
  EvalSet set;
  for (const ManifestEntry& e : manifest.entries) {
    const int image = static_cast<int>(set.images.size());
    const std::string stem = fs::path(e.image).stem().string();
    set.images.push_back({stem, e.width, e.height});
    const auto labels = parse_yolo_labels(read_text_file(root / e.label), e.width, e.height);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      GroundTruthEntry g{image, labels[k].class_label, labels[k].box, std::nullopt, stem + "_" + std::to_string(k)};
      if (masks_dir) {
        const fs::path p = *masks_dir / (stem + "_" + std::to_string(k) + ".png");
        if (fs::exists(p)) g.mask = io::read_mask(p);
      }
      set.ground_truth.push_back(std::move(g));
    }
  }
  return set;
}

std::vector<Detection> parse_yolo_predictions(std::string_view text, int image, int width, int height) {
  std::vector<Detection> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int cls;
    double conf, cx, cy, w, h;
    std::string rest;
    if (!(ls >> cls >> conf >> cx >> cy >> w >> h) || (ls >> rest))
      fail(ErrorCode::kProtocolError, "bad prediction on line " + std::to_string(lineno));
    out.push_back({image, cls,
                   {(cx - w / 2) * width, (cy - h / 2) * height, (cx + w / 2) * width, (cy + h / 2) * height},
                   conf});
  }
  return out;
}

void load_yolo_predictions(EvalSet& set, const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIoFailure, "prediction directory " + dir.string() + " not found");
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const fs::path p = dir / (set.images[i].name + ".txt");
    if (!fs::exists(p)) continue;
    const auto dets = parse_yolo_predictions(read_text_file(p), static_cast<int>(i), set.images[i].width,
                                             set.images[i].height);
    set.detections.insert(set.detections.end(), dets.begin(), dets.end());
  }
}

void load_coco_results(EvalSet& set, const fs::path& path) {
  try {
    const json j = json::parse(read_text_file(path));
    for (const json& r : j) {
      int image = -1;
      const json& id = r.at("image_id");
      if (id.is_number_integer()) {
        image = id.get<int>() - 1;
        if (image < 0 || image >= static_cast<int>(set.images.size()))
          fail(ErrorCode::kProtocolError, "COCO result refers to missing image id " + id.dump());
      } else {
        image = image_by_stem(set, id.get<std::string>());
        if (image < 0) fail(ErrorCode::kProtocolError, "COCO result refers to unknown image " + id.dump());
      }
      const auto b = r.at("bbox").get<std::array<double, 4>>();
      set.detections.push_back(
          {image, r.at("category_id").get<int>(), {b[0], b[1], b[0] + b[2], b[1] + b[3]}, r.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("COCO results: ") + e.what());
  }
}

}  // namespace ocs
