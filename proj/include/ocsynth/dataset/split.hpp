#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ocs {

struct InstanceRef {
  std::string id;
  int class_label = 0;

  bool operator==(const InstanceRef&) const = default;
};

struct VideoRecord {
  std::string id;
  int frames = 0;
  std::vector<InstanceRef> instances;

  bool operator==(const VideoRecord&) const = default;
};

// Nodes are numbered in order of first appearance across the videos; each
// component lists its nodes ascending, and components are ordered by their
// smallest node.
struct CooccurrenceGraph {
  std::vector<InstanceRef> nodes;
  std::vector<std::pair<int, int>> edges;  // a < b, sorted, unique
  std::vector<int> component;              // node -> component index
  std::vector<std::vector<int>> components;
  std::vector<VideoRecord> videos;

  int node(std::string_view id) const;  // -1 if absent
};

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

inline constexpr std::array<Split, 3> kSplits{Split::kTrain, Split::kVal, Split::kTest};

std::string_view to_string(Split split);

struct SplitRatio {
  double train = 2.0;
  double val = 1.0;
  double test = 2.0;

  double share(Split s) const;
  void validate() const;
};

// "2:1:2"; throws InvalidArgument.
SplitRatio parse_ratio(std::string_view text);

struct SplitAssignment {
  std::map<std::string, Split> instances;
  std::map<std::string, Split> videos;
  // Per class: instances assigned and ratio targets, indexed by Split.
  std::map<int, std::array<int, 3>> assigned;
  std::map<int, std::array<double, 3>> targets;
  std::array<int, 3> instance_totals{};
  std::array<int, 3> video_totals{};
  std::array<long long, 3> frame_totals{};

  // Largest |assigned - target| over classes and splits.
  double max_deviation() const;
};

// Throws InvalidArgument on an empty corpus, an empty video or an instance
// listed under two classes.
CooccurrenceGraph build_cooccurrence_graph(const std::vector<VideoRecord>& videos);

// Components go largest first to whichever split minimises the summed
// per-class deviation from the ratio targets; ties prefer train, then test,
// then val.
SplitAssignment greedy_split(const CooccurrenceGraph& graph, const SplitRatio& ratio);

std::string videos_to_json(const std::vector<VideoRecord>& videos);
std::vector<VideoRecord> videos_from_json(std::string_view text);
std::vector<VideoRecord> read_videos(const std::filesystem::path& path);

std::string split_report_json(const CooccurrenceGraph& graph, const SplitAssignment& split);

}  // namespace ocs
