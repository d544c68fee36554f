#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "ocsynth/scene/geometry.hpp"

namespace ocs {

struct MeshObject {
  std::vector<Vec3> vertices;  // metres, object frame
  std::vector<std::array<int, 3>> triangles;
  int class_label = 0;
  std::string instance_id;
  std::string source;  // file the mesh was loaded from, recorded in scenes
  Aabb3 aabb;          // canonical, object frame

  void validate() const;
};

// Sets aabb from the vertices and validates (>= 4 non-coplanar vertices,
// triangle indices in range).
void finalize_mesh(MeshObject& mesh);

// Wavefront OBJ: `v` and `f` records (polygons fan-triangulated, negative
// indices allowed); other records ignored.
MeshObject load_obj(const std::filesystem::path& path);
// glTF 2.0, .gltf (embedded or external buffers) or .glb: every triangle
// primitive of every mesh, in mesh-local coordinates.
MeshObject load_gltf(const std::filesystem::path& path);
// Dispatches on extension.
MeshObject load_mesh(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const MeshObject& mesh);

MeshObject make_box_mesh(Vec3 size, Vec3 center = {});

// World-frame AABB of the posed vertices.
Aabb3 posed_aabb(const MeshObject& mesh, const Pose3D& pose);

}  // namespace ocs
