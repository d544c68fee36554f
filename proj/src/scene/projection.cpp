#include "ocsynth/scene/projection.hpp"

#include <algorithm>
#include <limits>

namespace ocs {

CameraPose look_at(Vec3 eye, Vec3 target, Vec3 down) {
  const Vec3 z = normalized(target - eye);
  const Vec3 side = cross(down, z);
  if (norm(side) < 1e-12) fail(ErrorCode::kInvalidArgument, "look_at direction parallel to the down vector");
  const Vec3 x = normalized(side);
  const Vec3 y = cross(z, x);
  Mat3 r;
  r.m = {x.x, y.x, z.x, x.y, y.y, z.y, x.z, y.z, z.z};
  return {eye, from_matrix(r)};
}

std::optional<BBox> project_bbox(const MeshObject& mesh, const Pose3D& pose, const CameraPose& camera,
                                 const CameraIntrinsics& k, double near) {
  if (mesh.vertices.empty()) fail(ErrorCode::kInvalidArgument, "empty mesh");
  const Mat3 world = to_matrix(pose.rotation);
  const Mat3 view = to_matrix(camera.rotation).transposed();
  std::vector<Vec3> cam(mesh.vertices.size());
  bool all_front = true;
  for (std::size_t i = 0; i < cam.size(); ++i) {
    cam[i] = view * (pose.position + world * (pose.scale * mesh.vertices[i]) - camera.position);
    all_front = all_front && cam[i].z > near;
  }

  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  auto add = [&](Vec3 p) {
    const double u = k.fx * p.x / p.z + k.cx, v = k.fy * p.y / p.z + k.cy;
    x0 = std::min(x0, u), x1 = std::max(x1, u);
    y0 = std::min(y0, v), y1 = std::max(y1, v);
  };
  if (all_front || mesh.triangles.empty()) {
    for (const Vec3& p : cam)
      if (p.z > near) add(p);
  } else {
    // Sutherland-Hodgman against z >= near, one triangle at a time.
    for (const auto& t : mesh.triangles) {
      for (int e = 0; e < 3; ++e) {
        const Vec3 a = cam[t[e]], b = cam[t[(e + 1) % 3]];
        const bool ina = a.z >= near, inb = b.z >= near;
        if (ina) add(a);
        if (ina != inb) {
          const double s = (near - a.z) / (b.z - a.z);
          Vec3 c = a + s * (b - a);
          c.z = near;
          add(c);
        }
      }
    }
  }
  if (!(x0 <= x1 && y0 <= y1)) return std::nullopt;
  return clip_to_frame({x0, y0, x1, y1}, k.width, k.height);
}

bool size_feasible(const BBox& box, int frame_width, int frame_height, double min_frac, double max_frac) {
  const double frac = box.area() / (static_cast<double>(frame_width) * frame_height);
  return frac >= min_frac && frac <= max_frac;
}

}  // namespace ocs
