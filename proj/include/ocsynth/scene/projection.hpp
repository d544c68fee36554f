#pragma once

#include <optional>

#include "ocsynth/bbox.hpp"
#include "ocsynth/scene/mesh.hpp"
#include "ocsynth/scene/planes.hpp"

namespace ocs {

// Camera-to-world pose of an OpenCV-convention camera (x right, y down,
// z forward). p_camera = R^T (p_world - position).
struct CameraPose {
  Vec3 position;
  Quat rotation;

  Vec3 to_camera(Vec3 world) const { return to_matrix(rotation).transposed() * (world - position); }
  bool operator==(const CameraPose&) const = default;
};

// Camera at `eye` looking at `target`, image rows aligned with `down`.
CameraPose look_at(Vec3 eye, Vec3 target, Vec3 down);

inline constexpr double kNearPlane = 0.05;

// Tight pixel box of the posed mesh: triangles are clipped against the near
// plane, projected by pinhole, and the box is clipped to the frame.
std::optional<BBox> project_bbox(const MeshObject& mesh, const Pose3D& pose, const CameraPose& camera,
                                 const CameraIntrinsics& k, double near = kNearPlane);

// area(box) / area(frame) within [min_frac, max_frac], inclusive.
bool size_feasible(const BBox& box, int frame_width, int frame_height, double min_frac = 0.005,
                   double max_frac = 0.4);

}  // namespace ocs
