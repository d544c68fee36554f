#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ocsynth/bbox.hpp"
#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/image.hpp"

namespace ocs {

struct Detection {
  int image = 0;  // index into EvalSet::images
  int class_label = 0;
  BBox box;
  double confidence = 0.0;
};

struct GroundTruthEntry {
  int image = 0;
  int class_label = 0;
  BBox box;
  std::optional<Mask> mask;  // frame-sized
  std::string instance_id;
};

struct EvalImage {
  std::string name;
  int width = 0;
  int height = 0;
};

struct EvalSet {
  std::vector<EvalImage> images;
  std::vector<GroundTruthEntry> ground_truth;
  std::vector<Detection> detections;

  // Throws InvalidArgument on bad boxes, confidences, image indices, or a
  // mask whose tight box differs from its entry box by more than `mask_tol`.
  void validate(double mask_tol = 0.01) const;
};

double iou(const BBox& a, const BBox& b);

struct DetectionOutcome {
  int detection = 0;  // index into the input list
  double confidence = 0.0;
  int gt = -1;  // matched ground-truth index, -1 for a false positive
};

struct ClassMatches {
  std::vector<DetectionOutcome> outcomes;  // confidence descending
  int num_gt = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

// Per class, detections in descending confidence (ties by input order) take
// the unmatched same-image ground truth of highest IoU >= thresh, ties to the
// lower index.
std::map<int, ClassMatches> match_detections(const std::vector<Detection>& detections,
                                             const std::vector<GroundTruthEntry>& ground_truth,
                                             double iou_thresh = 0.5);

enum class ApMethod { k101Point, kEnvelope };

// 101-point: mean over r = 0, 0.01, ..., 1 of the max precision at recall >= r.
// Envelope: exact area under the same monotone envelope. Throws NoGroundTruth.
double average_precision(const ClassMatches& matches, ApMethod method = ApMethod::k101Point);

struct ClassReport {
  double ap = 0.0;
  int num_gt = 0;
  int num_det = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct BinReport {
  std::string label;
  double lo = 0.0;  // percent, exclusive except for the zero bin
  double hi = 0.0;  // percent, inclusive; infinity for the last bin
  int images = 0;
  std::optional<double> map;  // absent when the bin has no ground truth
};

struct EvalConfig {
  double iou_thresh = 0.5;
  ApMethod method = ApMethod::k101Point;
  // Upper edges in percent after the zero bin: {0}, (0,e0], ..., (e_last, inf).
  std::vector<double> bin_edges{5.0, 10.0, 15.0, 20.0};

  void validate() const;
};

struct EvalReport {
  std::map<int, ClassReport> classes;
  std::optional<double> map;  // mean AP over classes with ground truth
  std::vector<BinReport> bins;
  std::vector<double> image_occlusion;  // fraction per image
  std::string occlusion_source;         // "mask", "box" or "mixed"
};

// Occlusion of one image's ground truth: masks when every entry has one,
// box rectangles otherwise; 0 for images without ground truth.
double image_occlusion(const EvalSet& set, int image, bool* used_masks = nullptr);

int occlusion_bin(double fraction, const std::vector<double>& edges);
std::vector<std::string> bin_labels(const std::vector<double>& edges);

EvalReport evaluate(const EvalSet& set, const EvalConfig& config = {});

// Parses "0,5,10,15,20" style edge lists; a leading 0 is optional.
std::vector<double> parse_bin_edges(std::string_view text);

std::string report_to_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

// Ground truth from a manifest's YOLO labels. Optional masks are read from
// `<masks_dir>/<image stem>_<k>.png` for the k-th label of each image.
EvalSet load_ground_truth(const DatasetManifest& manifest, const std::filesystem::path& root,
                          const std::optional<std::filesystem::path>& masks_dir = std::nullopt);

// "class conf cx cy w h" normalised, one file per image stem under `dir`;
// missing files mean no detections.
void load_yolo_predictions(EvalSet& set, const std::filesystem::path& dir);
std::vector<Detection> parse_yolo_predictions(std::string_view text, int image, int width, int height);
// COCO results array: image_id is the 1-based image index or the image stem.
void load_coco_results(EvalSet& set, const std::filesystem::path& path);

}  // namespace ocs
