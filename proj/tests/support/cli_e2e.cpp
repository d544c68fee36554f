#include "support/cli_e2e.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/dataset/plan.hpp"
#include "ocsynth/dataset/split.hpp"
#include "ocsynth/eval/eval.hpp"
#include "ocsynth/imaging/io.hpp"
#include "ocsynth/scene/scene.hpp"
#include "support/eval_oracle.hpp"

namespace e2e {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string quote(const std::string& s) { return "'" + s + "'"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> relative_files(const fs::path& root) {
  std::vector<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

struct Checker {
  std::vector<std::string>& problems;

  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }

  template <typename F>
  void guarded(const std::string& what, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      problems.push_back(what + ": " + e.what());
    }
  }
};

void check_run_record(Checker& c, const fs::path& out, const std::string& sub) {
  c.guarded("run_record.json", [&] {
    const json r = read_json(out / "run_record.json");
    for (const char* k : {"tool", "version", "subcommand", "seed", "config_sha256", "config", "wall_time_s", "items",
                          "throughput_per_s"})
      c.expect(r.contains(k), std::string("run record lacks ") + k);
    c.expect(r.at("subcommand") == sub, "run record names the wrong subcommand");
    c.expect(std::regex_match(r.at("config_sha256").get<std::string>(), std::regex("[0-9a-f]{64}")),
             "config hash is not SHA-256 hex");
    c.expect(r.at("config").contains(sub) && r.at("config").contains("seed"), "run record config lacks its block");
    c.expect(r.at("wall_time_s").get<double>() >= 0.0, "negative wall time");
    c.expect(r.at("items").get<long long>() > 0, "run produced no items");
  });
}

void check_dataset(Checker& c, const fs::path& out, std::size_t count) {
  c.guarded("manifest", [&] {
    const ocs::DatasetManifest m = ocs::read_manifest(out / "manifest.json");
    ocs::validate_manifest(m, out);
    c.expect(m.entries.size() == count, "manifest has " + std::to_string(m.entries.size()) + " entries");
    for (const ocs::ManifestEntry& e : m.entries) {
      const ocs::Image img = ocs::io::read_image(out / e.image);
      c.expect(img.width() == e.width && img.height() == e.height, e.image + " size disagrees with the manifest");
      // Six-decimal normalised labels move an edge by up to 1e-6 of the frame.
      const double tx = 1e-6 * e.width, ty = 1e-6 * e.height;
      for (const auto& l : ocs::parse_yolo_labels(ocs::read_text_file(out / e.label), e.width, e.height))
        c.expect(l.box.valid() && l.box.x_min >= -tx && l.box.y_min >= -ty && l.box.x_max <= e.width + tx &&
                     l.box.y_max <= e.height + ty,
                 e.label + " has a box outside the frame");
    }
  });
}

void check_scenes(Checker& c, const fs::path& out, std::size_t count) {
  c.guarded("scenes", [&] {
    const auto files = relative_files(out / "scenes");
    c.expect(files.size() == count, "expected " + std::to_string(count) + " scenes, found " + std::to_string(files.size()));
    for (const std::string& f : files) {
      const ocs::SceneDescription s = ocs::read_scene(out / "scenes" / f);
      const int w = s.camera.intrinsics.width, h = s.camera.intrinsics.height;
      const fs::path label = out / "labels" / (fs::path(f).stem().string() + ".txt");
      const auto labels = ocs::parse_yolo_labels(ocs::read_text_file(label), w, h);
      c.expect(labels.size() == s.annotations.size(), f + " label count disagrees with the scene");
      c.expect(!s.objects.empty(), f + " has no objects");
      for (const auto& a : s.annotations)
        c.expect(a.box.valid() && a.box.x_min >= 0 && a.box.y_min >= 0 && a.box.x_max <= w && a.box.y_max <= h,
                 f + " annotation outside the frame");
    }
  });
}

void check_split(Checker& c, const fs::path& out, const fs::path& fixtures) {
  c.guarded("split", [&] {
    const json r = read_json(out / "split.json");
    for (const char* k : {"components", "edges", "totals", "classes", "max_deviation", "instances", "videos"})
      c.expect(r.contains(k), std::string("split report lacks ") + k);
    const auto all = ocs::read_videos(fixtures / "videos.json");
    std::map<std::string, std::string> owner;
    std::size_t videos = 0;
    for (const char* sp : {"train", "val", "test"}) {
      const auto part = ocs::read_videos(out / (std::string(sp) + "_videos.json"));
      videos += part.size();
      c.expect(r.at("totals").at(sp).at("videos").get<std::size_t>() == part.size(), std::string(sp) + " video total");
      for (const auto& v : part)
        for (const auto& inst : v.instances) {
          const auto [it, fresh] = owner.emplace(inst.id, sp);
          c.expect(fresh || it->second == sp, inst.id + " appears in two splits");
        }
    }
    c.expect(videos == all.size(), "split files do not partition the videos");
    for (const auto& [cls, per] : r.at("classes").items())
      for (const auto& [sp, v] : per.items())
        c.expect(std::abs(v.at("instances").get<double>() - v.at("target").get<double>()) <= 1.0,
                 "class " + cls + " deviates by more than one in " + sp);
  });
}

void check_mix(Checker& c, const fs::path& out) {
  c.guarded("mix", [&] {
    const ocs::DatasetManifest m = ocs::read_manifest(out / "manifest.json");
    ocs::validate_manifest(m, out);
    const ocs::TrainingPlan plan = ocs::plan_from_json(ocs::read_text_file(out / "plan.json"));
    c.expect(!plan.stages.empty(), "training plan has no stages");
    for (const ocs::TrainingStage& st : plan.stages) {
      ocs::validate_manifest(st.manifest, out);
      const fs::path dir = out / "export" / st.name;
      const json yaml = read_json(dir / "dataset.yaml");
      c.expect(yaml.contains("nc") && yaml.contains("names"), st.name + " export lacks nc/names");
      const ocs::DatasetManifest back = ocs::import_manifest(dir, ocs::ExportFormat::kYoloDir);
      c.expect(back.entries.size() == st.manifest.entries.size() && back.class_counts == st.manifest.class_counts,
               st.name + " export does not round-trip");
    }
  });
}

void check_eval(Checker& c, const fs::path& out, const fs::path& fixtures) {
  c.guarded("eval", [&] {
    const json r = read_json(out / "report.json");
    for (const char* k : {"classes", "map50", "bins", "occlusion_source", "image_occlusion"})
      c.expect(r.contains(k), std::string("eval report lacks ") + k);
    c.expect(fs::exists(out / "report.txt"), "report.txt missing");
    const fs::path gt = fixtures / "eval" / "gt" / "manifest.json";
    ocs::EvalSet set = ocs::load_ground_truth(ocs::read_manifest(gt), gt.parent_path(), std::nullopt);
    ocs::load_yolo_predictions(set, fixtures / "eval" / "predictions");
    std::set<int> classes;
    for (const auto& g : set.ground_truth) classes.insert(g.class_label);
    c.expect(r.at("classes").size() == classes.size(), "report class count");
    double sum = 0.0;
    for (int cls : classes) {
      const double want = oracle::brute_ap(set.detections, set.ground_truth, cls, 0.5);
      const double got = r.at("classes").at(std::to_string(cls)).at("ap50").get<double>();
      c.expect(std::abs(want - got) <= 1e-9, "class " + std::to_string(cls) + " AP " + std::to_string(got) +
                                                 " vs oracle " + std::to_string(want));
      sum += want;
    }
    c.expect(std::abs(r.at("map50").get<double>() - sum / classes.size()) <= 1e-9, "mAP disagrees with the oracle");
    std::size_t binned = 0;
    for (const json& b : r.at("bins")) binned += b.at("images").get<std::size_t>();
    c.expect(binned == set.images.size(), "bins do not partition the images");
  });
}

}  // namespace

int run_cli(const fs::path& cli, const fs::path& cwd, const std::string& args, const fs::path& log) {
  const std::string cmd = "cd " + quote(cwd.string()) + " && " + quote(cli.string()) + " " + args + " >> " +
                          quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

std::vector<std::string> tree_differences(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diff;
  const auto fa = relative_files(a), fb = relative_files(b);
  std::set<std::string> all(fa.begin(), fa.end());
  all.insert(fb.begin(), fb.end());
  for (const std::string& f : all) {
    if (fs::path(f).filename() == "run_record.json") continue;
    if (!fs::exists(a / f) || !fs::exists(b / f) || slurp(a / f) != slurp(b / f)) diff.push_back(f);
  }
  return diff;
}

std::vector<SubcommandCheck> run_fixture_suite(const fs::path& cli, const fs::path& fixtures, const fs::path& work,
                                               const std::string& endpoint) {
  struct Case {
    std::string sub, extra;
  };
  const std::vector<Case> cases{{"gen-cutpaste", "--count 10"},
                                {"gen-diffusion", "--count 4 --endpoint " + quote(endpoint)},
                                {"plan-3dcp", "--count 10"},
                                {"plan-3drp", "--count 5"},
                                {"split", "--ratio 2:1:2"},
                                {"mix", ""},
                                {"eval", "--bins 0,5,10,15,20"}};
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path log = work / "cli.log";
  std::vector<SubcommandCheck> out;
  for (const Case& cs : cases) {
    SubcommandCheck check{cs.sub, -1, {}};
    Checker c{check.problems};
    const fs::path a = work / "a" / cs.sub, b = work / "b" / cs.sub;
    const std::string common = cs.sub + " --config config.json --seed 7 " + cs.extra;
    check.exit_code = run_cli(cli, fixtures, common + " --workers 1 --out " + quote(a.string()), log);
    const int rerun = run_cli(cli, fixtures, common + " --workers 2 --out " + quote(b.string()), log);
    c.expect(check.exit_code == 0 && rerun == 0,
             "exit " + std::to_string(check.exit_code) + "/" + std::to_string(rerun) + ", see " + log.string());
    if (!check.problems.empty()) {
      out.push_back(std::move(check));
      continue;
    }
    check_run_record(c, a, cs.sub);
    if (cs.sub == "gen-cutpaste") check_dataset(c, a, 10);
    if (cs.sub == "gen-diffusion") check_dataset(c, a, 4);
    if (cs.sub == "plan-3dcp") check_scenes(c, a, 10);
    if (cs.sub == "plan-3drp") check_scenes(c, a, 10);
    if (cs.sub == "split") check_split(c, a, fixtures);
    if (cs.sub == "mix") check_mix(c, a);
    if (cs.sub == "eval") check_eval(c, a, fixtures);
    c.guarded("rerun", [&] {
      for (const std::string& f : tree_differences(a, b)) c.expect(false, "rerun differs in " + f);
      c.expect(read_json(a / "run_record.json").at("config_sha256") == read_json(b / "run_record.json").at("config_sha256"),
               "rerun config hash differs");
    });
    out.push_back(std::move(check));
  }
  return out;
}

}  // namespace e2e
