#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "ocsynth/image.hpp"
#include "ocsynth/scene/geometry.hpp"

namespace ocs {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
  CameraIntrinsics zoomed(double factor) const { return {fx * factor, fy * factor, cx, cy, width, height}; }
  bool operator==(const CameraIntrinsics&) const = default;
};

// {fx, fy, cx, cy, width, height}
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

// Camera-frame points in metres (x right, y down, z forward). When organized,
// pixel[i] is the row-major pixel index the point came from.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<int> pixel;
  int width = 0;
  int height = 0;

  bool organized() const { return width > 0 && height > 0 && pixel.size() == points.size(); }
};

PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& k);

struct PlaneModel {
  Vec3 normal;  // unit, oriented away from the camera origin
  double d = 0.0;
  std::vector<int> inliers;
  double mse = 0.0;
  Vec3 centroid;
  Vec3 axis_u;  // in-plane basis for hull coordinates
  Vec3 axis_v;
  std::vector<std::array<double, 2>> hull;  // counter-clockwise

  double distance(Vec3 p) const { return dot(normal, p) + d; }
  Vec3 from_plane(double u, double v) const { return centroid + u * axis_u + v * axis_v; }
};

struct PlaneParams {
  int block_size = 10;
  double merge_mse_max = 0.005 * 0.005;
  int min_inliers = 400;
  double min_block_fill = 0.75;

  void validate() const;
};

std::vector<PlaneModel> detect_planes_ahc(const PointCloud& cloud, const PlaneParams& params = {});

// Least-squares plane of the selected points: centroid, unit normal (least
// eigenvector of the covariance) and MSE (the least eigenvalue).
struct PlaneFit {
  Vec3 centroid;
  Vec3 normal;
  double mse = 0.0;
};
PlaneFit fit_plane(const std::vector<Vec3>& points, const std::vector<int>& indices);

// 2D convex hull, counter-clockwise, collinear points dropped.
std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts);
bool point_in_convex(const std::vector<std::array<double, 2>>& hull, std::array<double, 2> p);

struct SupportPlanes {
  std::vector<PlaneModel> horizontal;
  int floor = 0;  // index into horizontal
};

SupportPlanes select_support_planes(const std::vector<PlaneModel>& planes, const UpAxis& up = {},
                                    double angle_thresh_deg = 10.0);

}  // namespace ocs
