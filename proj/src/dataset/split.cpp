#include "ocsynth/dataset/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/error.hpp"

namespace ocs {

using nlohmann::json;

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

constexpr std::array<Split, 3> kTieOrder{Split::kTrain, Split::kTest, Split::kVal};

}  // namespace

int CooccurrenceGraph::node(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

double SplitRatio::share(Split s) const {
  const double v = s == Split::kTrain ? train : s == Split::kVal ? val : test;
  return v / (train + val + test);
}

void SplitRatio::validate() const {
  if (!(train > 0 && val > 0 && test > 0) || !std::isfinite(train + val + test))
    fail(ErrorCode::kInvalidArgument, "split ratio parts must be positive");
}

SplitRatio parse_ratio(std::string_view text) {
  std::array<double, 3> parts{};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? text.find(':', pos) : text.size();
    if (end == std::string_view::npos) fail(ErrorCode::kInvalidArgument, "ratio must be train:val:test");
    const std::string part(text.substr(pos, end - pos));
    std::size_t used = 0;
    try {
      parts[i] = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) fail(ErrorCode::kInvalidArgument, "bad ratio part '" + part + "'");
    pos = end + 1;
  }
  SplitRatio r{parts[0], parts[1], parts[2]};
  r.validate();
  return r;
}

double SplitAssignment::max_deviation() const {
  double worst = 0.0;
  for (const auto& [cls, a] : assigned)
    for (int s = 0; s < 3; ++s) worst = std::max(worst, std::fabs(a[s] - targets.at(cls)[s]));
  return worst;
}

CooccurrenceGraph build_cooccurrence_graph(const std::vector<VideoRecord>& videos) {
  if (videos.empty()) fail(ErrorCode::kInvalidArgument, "no videos");
  CooccurrenceGraph g;
  g.videos = videos;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<int>> members(videos.size());
  for (std::size_t v = 0; v < videos.size(); ++v) {
    if (videos[v].instances.empty()) fail(ErrorCode::kInvalidArgument, "video " + videos[v].id + " has no instances");
    for (const InstanceRef& inst : videos[v].instances) {
      auto [it, fresh] = index.try_emplace(inst.id, static_cast<int>(g.nodes.size()));
      if (fresh)
        g.nodes.push_back(inst);
      else if (g.nodes[it->second].class_label != inst.class_label)
        fail(ErrorCode::kInvalidArgument, "instance " + inst.id + " appears under two classes");
      members[v].push_back(it->second);
    }
  }
  std::set<std::pair<int, int>> edges;
  UnionFind uf(static_cast<int>(g.nodes.size()));
  for (auto& m : members) {
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j) edges.insert({m[i], m[j]});
    for (std::size_t i = 1; i < m.size(); ++i) uf.unite(m[0], m[i]);
  }
  g.edges.assign(edges.begin(), edges.end());
  g.component.assign(g.nodes.size(), -1);
  std::vector<int> root_component(g.nodes.size(), -1);
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const int r = uf.find(static_cast<int>(n));
    if (root_component[r] < 0) {
      root_component[r] = static_cast<int>(g.components.size());
      g.components.emplace_back();
    }
    g.component[n] = root_component[r];
    g.components[root_component[r]].push_back(static_cast<int>(n));
  }
  return g;
}

SplitAssignment greedy_split(const CooccurrenceGraph& g, const SplitRatio& ratio) {
  ratio.validate();
  SplitAssignment out;
  for (const InstanceRef& n : g.nodes) out.assigned[n.class_label];
  for (auto& [cls, a] : out.assigned) {
    const auto total = std::count_if(g.nodes.begin(), g.nodes.end(), [&](const InstanceRef& n) { return n.class_label == cls; });
    for (Split s : kSplits) out.targets[cls][static_cast<int>(s)] = static_cast<double>(total) * ratio.share(s);
  }

  std::vector<int> order(g.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return g.components[a].size() > g.components[b].size(); });

  std::vector<Split> component_split(g.components.size(), Split::kTrain);
  for (int c : order) {
    std::map<int, int> counts;
    for (int n : g.components[c]) ++counts[g.nodes[n].class_label];
    Split best = kTieOrder[0];
    double best_delta = 0.0;
    bool first = true;
    for (Split s : kTieOrder) {
      const int si = static_cast<int>(s);
      double delta = 0.0;
      for (const auto& [cls, k] : counts) {
        const double a = out.assigned[cls][si], t = out.targets[cls][si];
        delta += std::fabs(a + k - t) - std::fabs(a - t);
      }
      if (first || delta < best_delta - 1e-9) {
        best = s;
        best_delta = delta;
        first = false;
      }
    }
    component_split[c] = best;
    for (const auto& [cls, k] : counts) out.assigned[cls][static_cast<int>(best)] += k;
  }

  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const Split s = component_split[g.component[n]];
    out.instances[g.nodes[n].id] = s;
    ++out.instance_totals[static_cast<int>(s)];
  }
  for (const VideoRecord& v : g.videos) {
    const Split s = out.instances.at(v.instances.front().id);
    out.videos[v.id] = s;
    ++out.video_totals[static_cast<int>(s)];
    out.frame_totals[static_cast<int>(s)] += v.frames;
  }
  return out;
}

std::string videos_to_json(const std::vector<VideoRecord>& videos) {
  json arr = json::array();
  for (const VideoRecord& v : videos) {
    json inst = json::array();
    for (const InstanceRef& i : v.instances) inst.push_back({{"id", i.id}, {"class", i.class_label}});
    arr.push_back({{"id", v.id}, {"frames", v.frames}, {"instances", inst}});
  }
  return json{{"videos", arr}}.dump(2) + "\n";
}

std::vector<VideoRecord> videos_from_json(std::string_view text) {
  std::vector<VideoRecord> out;
  try {
    const json j = json::parse(text);
    for (const json& v : j.at("videos")) {
      VideoRecord r{v.at("id").get<std::string>(), v.at("frames").get<int>(), {}};
      if (r.frames < 0) fail(ErrorCode::kProtocolError, "video " + r.id + " has negative frame count");
      for (const json& i : v.at("instances")) r.instances.push_back({i.at("id").get<std::string>(), i.at("class").get<int>()});
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("video list: ") + e.what());
  }
  return out;
}

std::vector<VideoRecord> read_videos(const std::filesystem::path& path) { return videos_from_json(read_text_file(path)); }

std::string split_report_json(const CooccurrenceGraph& g, const SplitAssignment& s) {
  json totals, per_class = json::object();
  for (Split sp : kSplits) {
    const int i = static_cast<int>(sp);
    totals[std::string(to_string(sp))] = {
        {"instances", s.instance_totals[i]}, {"videos", s.video_totals[i]}, {"frames", s.frame_totals[i]}};
  }
  for (const auto& [cls, a] : s.assigned) {
    json c;
    for (Split sp : kSplits) {
      const int i = static_cast<int>(sp);
      c[std::string(to_string(sp))] = {{"instances", a[i]}, {"target", s.targets.at(cls)[i]}};
    }
    per_class[std::to_string(cls)] = c;
  }
  json instances = json::object(), videos = json::object();
  for (const auto& [id, sp] : s.instances) instances[id] = to_string(sp);
  for (const auto& [id, sp] : s.videos) videos[id] = to_string(sp);
  return json{{"components", g.components.size()},
              {"edges", g.edges.size()},
              {"totals", totals},
              {"classes", per_class},
              {"max_deviation", s.max_deviation()},
              {"instances", instances},
              {"videos", videos}}
             .dump(2) +
         "\n";
}

}  // namespace ocs
