#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ocsynth/bbox.hpp"
#include "ocsynth/scene/projection.hpp"

namespace ocs {

inline constexpr int kSceneSchemaVersion = 1;

struct SceneBackground {
  std::string type;  // "rgbd" or "hdri"
  std::string rgb;
  std::string depth;
  std::string hdri;
};

struct SceneLighting {
  std::string type = "ambient";  // "ambient" or "hdri"
  std::string hdri;
  std::array<double, 3> color{1.0, 1.0, 1.0};
  double intensity = 1.0;
  double rotation_deg = 0.0;
};

struct SceneCamera {
  CameraPose pose;
  CameraIntrinsics intrinsics;
  double exposure_ev = 0.0;
  double zoom = 1.0;
  double near = kNearPlane;
};

struct SceneObject {
  std::string mesh;
  int class_label = 0;
  std::string instance_id;
  Pose3D pose;
  int support_plane = -1;  // index into SceneDescription::planes, -1 = free-floating
  Aabb3 aabb;
};

struct SceneAnnotation {
  int object = 0;
  int class_label = 0;
  BBox box;
};

struct ScenePlane {
  Vec3 normal;
  double d = 0.0;
  double mse = 0.0;
  int inliers = 0;
  bool floor = false;
};

struct SceneDescription {
  int schema_version = kSceneSchemaVersion;
  std::string method;  // "3dcp" or "3drp"
  std::uint64_t seed = 0;
  int view = 0;
  SceneBackground background;
  SceneCamera camera;
  SceneLighting lighting;
  std::vector<SceneObject> objects;
  std::vector<SceneAnnotation> annotations;
  std::vector<ScenePlane> planes;
};

std::string scene_to_json(const SceneDescription& scene);
// Throws ProtocolError on schema violations, including a foreign version.
SceneDescription scene_from_json(const std::string& text);
void write_scene(const std::filesystem::path& path, const SceneDescription& scene);
SceneDescription read_scene(const std::filesystem::path& path);

}  // namespace ocs
