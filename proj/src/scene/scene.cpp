#include "ocsynth/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include "ocsynth/dataset/manifest.hpp"

namespace ocs {

using nlohmann::json;

namespace {

json vec(Vec3 v) { return json::array({v.x, v.y, v.z}); }
json quat(Quat q) { return json::array({q.x, q.y, q.z, q.w}); }
Vec3 get_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Quat get_quat(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

json intrinsics_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}
CameraIntrinsics get_intrinsics(const json& j) {
  return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
          j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
}

}  // namespace

std::string scene_to_json(const SceneDescription& s) {
  json bg{{"type", s.background.type}};
  if (s.background.type == "rgbd") {
    bg["rgb"] = s.background.rgb;
    bg["depth"] = s.background.depth;
  } else {
    bg["hdri"] = s.background.hdri;
  }
  json light{{"type", s.lighting.type},
             {"color", s.lighting.color},
             {"intensity", s.lighting.intensity},
             {"rotation_deg", s.lighting.rotation_deg}};
  if (s.lighting.type == "hdri") light["hdri"] = s.lighting.hdri;
  json objects = json::array();
  for (const SceneObject& o : s.objects) {
    objects.push_back({{"mesh", o.mesh},
                       {"class", o.class_label},
                       {"instance", o.instance_id},
                       {"position", vec(o.pose.position)},
                       {"rotation", quat(o.pose.rotation)},
                       {"scale", o.pose.scale},
                       {"support_plane", o.support_plane},
                       {"aabb", {{"min", vec(o.aabb.min)}, {"max", vec(o.aabb.max)}}}});
  }
  json annotations = json::array();
  for (const SceneAnnotation& a : s.annotations)
    annotations.push_back({{"object", a.object},
                           {"class", a.class_label},
                           {"bbox", json::array({a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max})}});
  json planes = json::array();
  for (const ScenePlane& p : s.planes)
    planes.push_back({{"normal", vec(p.normal)}, {"d", p.d}, {"mse", p.mse}, {"inliers", p.inliers}, {"floor", p.floor}});
  const json j{{"schema_version", s.schema_version},
               {"method", s.method},
               {"seed", s.seed},
               {"view", s.view},
               {"background", bg},
               {"camera",
                {{"position", vec(s.camera.pose.position)},
                 {"rotation", quat(s.camera.pose.rotation)},
                 {"intrinsics", intrinsics_json(s.camera.intrinsics)},
                 {"exposure_ev", s.camera.exposure_ev},
                 {"zoom", s.camera.zoom},
                 {"near", s.camera.near}}},
               {"lighting", light},
               {"objects", objects},
               {"annotations", annotations},
               {"planes", planes}};
  return j.dump(2) + "\n";
}

SceneDescription scene_from_json(const std::string& text) {
  SceneDescription s;
  try {
    const json j = json::parse(text);
    s.schema_version = j.at("schema_version").get<int>();
    if (s.schema_version != kSceneSchemaVersion)
      fail(ErrorCode::kProtocolError, "unsupported scene schema version " + std::to_string(s.schema_version));
    s.method = j.at("method").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.view = j.at("view").get<int>();
    const json& bg = j.at("background");
    s.background.type = bg.at("type").get<std::string>();
    if (s.background.type == "rgbd") {
      s.background.rgb = bg.at("rgb").get<std::string>();
      s.background.depth = bg.at("depth").get<std::string>();
    } else if (s.background.type == "hdri") {
      s.background.hdri = bg.at("hdri").get<std::string>();
    } else {
      fail(ErrorCode::kProtocolError, "unknown background type " + s.background.type);
    }
    const json& cam = j.at("camera");
    s.camera.pose = {get_vec(cam.at("position")), get_quat(cam.at("rotation"))};
    s.camera.intrinsics = get_intrinsics(cam.at("intrinsics"));
    s.camera.exposure_ev = cam.at("exposure_ev").get<double>();
    s.camera.zoom = cam.at("zoom").get<double>();
    s.camera.near = cam.at("near").get<double>();
    const json& light = j.at("lighting");
    s.lighting.type = light.at("type").get<std::string>();
    s.lighting.color = light.at("color").get<std::array<double, 3>>();
    s.lighting.intensity = light.at("intensity").get<double>();
    s.lighting.rotation_deg = light.at("rotation_deg").get<double>();
    if (s.lighting.type == "hdri") s.lighting.hdri = light.at("hdri").get<std::string>();
    for (const json& o : j.at("objects")) {
      SceneObject obj;
      obj.mesh = o.at("mesh").get<std::string>();
      obj.class_label = o.at("class").get<int>();
      obj.instance_id = o.at("instance").get<std::string>();
      obj.pose = {get_vec(o.at("position")), get_quat(o.at("rotation")), o.at("scale").get<double>()};
      obj.support_plane = o.at("support_plane").get<int>();
      obj.aabb = {get_vec(o.at("aabb").at("min")), get_vec(o.at("aabb").at("max"))};
      if (std::fabs(norm(obj.pose.rotation) - 1.0) > 1e-6) fail(ErrorCode::kProtocolError, "object rotation is not a unit quaternion");
      if (!(obj.pose.scale > 0.0)) fail(ErrorCode::kProtocolError, "object scale must be positive");
      s.objects.push_back(std::move(obj));
    }
    for (const json& a : j.at("annotations")) {
      const auto b = a.at("bbox").get<std::array<double, 4>>();
      SceneAnnotation ann{a.at("object").get<int>(), a.at("class").get<int>(), {b[0], b[1], b[2], b[3]}};
      if (ann.object < 0 || ann.object >= static_cast<int>(s.objects.size()))
        fail(ErrorCode::kProtocolError, "annotation refers to a missing object");
      s.annotations.push_back(ann);
    }
    for (const json& p : j.at("planes"))
      s.planes.push_back({get_vec(p.at("normal")), p.at("d").get<double>(), p.at("mse").get<double>(),
                          p.at("inliers").get<int>(), p.at("floor").get<bool>()});
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, std::string("scene description: ") + e.what());
  }
  return s;
}

void write_scene(const std::filesystem::path& path, const SceneDescription& scene) {
  write_text_file(path, scene_to_json(scene));
}

SceneDescription read_scene(const std::filesystem::path& path) { return scene_from_json(read_text_file(path)); }

}  // namespace ocs
