#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ocsynth/scene/scene.hpp"

namespace ocs {

// A depth background with its detected planes, shared read-only across
// scenes planned on it.
struct RgbdBackground {
  std::string rgb;
  std::string depth;
  CameraIntrinsics intrinsics;
  PointCloud cloud;
  std::vector<PlaneModel> planes;
};

RgbdBackground load_rgbd_background(const std::filesystem::path& rgb, const std::filesystem::path& depth,
                                    const CameraIntrinsics& intrinsics, const PlaneParams& params = {});
RgbdBackground make_rgbd_background(const DepthImage& depth, const CameraIntrinsics& intrinsics,
                                    const PlaneParams& params = {});

struct PlacementConfig {
  PlaneParams planes;
  UpAxis up;
  double horizontal_thresh_deg = 10.0;
  int max_attempts = 50;
  double clearance = 0.005;  // metres, AABB inflation for the scene-point test
  bool full_rotation = true;  // false: rotate about the up axis only
  double scale_min = 1.0;
  double scale_max = 1.0;
  double min_frac = 0.005;
  double max_frac = 0.4;

  void validate() const;
};

// Objects are inserted one by one on uniformly chosen horizontal planes, each
// resting on its support plane with the camera at the world origin.
SceneDescription plan_scene_3dcp(const RgbdBackground& background, const std::vector<MeshObject>& objects,
                                 const PlacementConfig& cfg, std::uint64_t seed);

struct ViewConfig {
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};
  UpAxis up;
  double z_min = 0.5;
  double z_max = 4.0;
  int views_per_scene = 1;
  double azimuth_min = -180.0;
  double azimuth_max = 180.0;
  double elevation_min = -15.0;
  double elevation_max = 30.0;
  double zoom_min = 0.8;
  double zoom_max = 1.5;
  double ev_min = -1.0;
  double ev_max = 1.0;
  int max_attempts = 50;
  double scale_min = 1.0;
  double scale_max = 1.0;
  double min_frac = 0.005;
  double max_frac = 0.4;

  void validate() const;
};

// Objects float at random poses inside the base camera's frustum shell; each
// view orbits the object centroid.
std::vector<SceneDescription> plan_scene_3drp(const std::string& hdri, const std::vector<MeshObject>& objects,
                                              const ViewConfig& cfg, std::uint64_t seed);

}  // namespace ocs
