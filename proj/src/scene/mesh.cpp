#include "ocsynth/scene/mesh.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ocsynth/dataset/manifest.hpp"
#include "ocsynth/util/encoding.hpp"

namespace ocs {

using nlohmann::json;

void MeshObject::validate() const {
  if (vertices.size() < 4) fail(ErrorCode::kInvalidArgument, "mesh needs at least 4 vertices");
  for (const auto& t : triangles)
    for (int i : t)
      if (i < 0 || i >= static_cast<int>(vertices.size()))
        fail(ErrorCode::kInvalidArgument, "triangle index out of range");
  // Non-coplanar: some vertex lies off the plane of a non-degenerate triangle.
  const Vec3 a = vertices[0];
  std::size_t j = 1;
  while (j < vertices.size() && norm(vertices[j] - a) == 0.0) ++j;
  std::size_t k = j + 1;
  Vec3 n;
  for (; k < vertices.size(); ++k) {
    n = cross(vertices[j] - a, vertices[k] - a);
    if (norm(n) > 0.0) break;
  }
  bool solid = false;
  if (k < vertices.size()) {
    n = normalized(n);
    double extent = 0.0;
    for (const Vec3& v : vertices) extent = std::max(extent, norm(v - a));
    for (const Vec3& v : vertices)
      if (std::fabs(dot(n, v - a)) > 1e-9 * extent) solid = true;
  }
  if (!solid) fail(ErrorCode::kInvalidArgument, "mesh vertices are coplanar");
}

void finalize_mesh(MeshObject& mesh) {
  if (mesh.vertices.empty()) fail(ErrorCode::kInvalidArgument, "mesh has no vertices");
  mesh.aabb = {mesh.vertices[0], mesh.vertices[0]};
  for (const Vec3& v : mesh.vertices)
    for (int i = 0; i < 3; ++i) {
      mesh.aabb.min[i] = std::min(mesh.aabb.min[i], v[i]);
      mesh.aabb.max[i] = std::max(mesh.aabb.max[i], v[i]);
    }
  mesh.validate();
}

MeshObject load_obj(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  MeshObject mesh;
  mesh.source = path.string();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) fail(ErrorCode::kDecodeFailure, path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) {
        int idx = 0;
        try {
          idx = std::stoi(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          fail(ErrorCode::kDecodeFailure, path.string() + ":" + std::to_string(line_no) + ": bad face index");
        }
        idx = idx < 0 ? static_cast<int>(mesh.vertices.size()) + idx : idx - 1;
        poly.push_back(idx);
      }
      if (poly.size() < 3) fail(ErrorCode::kDecodeFailure, path.string() + ":" + std::to_string(line_no) + ": face needs 3 indices");
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) mesh.triangles.push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

namespace {

std::vector<std::uint8_t> to_bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::size_t component_size(int type) {
  switch (type) {
    case 5121: return 1;
    case 5123: return 2;
    case 5125:
    case 5126: return 4;
    default: fail(ErrorCode::kDecodeFailure, "unsupported glTF component type " + std::to_string(type));
  }
}

// Raw bytes of element i of an accessor, with stride applied.
struct AccessorView {
  const std::uint8_t* base = nullptr;
  std::size_t stride = 0;
  std::size_t count = 0;
  int component = 0;
};

AccessorView accessor_view(const json& doc, const std::vector<std::vector<std::uint8_t>>& buffers, int index,
                           int components) {
  const json& acc = doc.at("accessors").at(index);
  const json& view = doc.at("bufferViews").at(acc.at("bufferView").get<int>());
  const auto& buf = buffers.at(view.at("buffer").get<int>());
  AccessorView out;
  out.component = acc.at("componentType").get<int>();
  out.count = acc.at("count").get<std::size_t>();
  const std::size_t elem = component_size(out.component) * components;
  out.stride = view.value("byteStride", static_cast<std::size_t>(0));
  if (out.stride == 0) out.stride = elem;
  const std::size_t offset = view.value("byteOffset", static_cast<std::size_t>(0)) + acc.value("byteOffset", static_cast<std::size_t>(0));
  const std::size_t length = view.at("byteLength").get<std::size_t>();
  if (out.count > 0 && (offset + (out.count - 1) * out.stride + elem > buf.size() ||
                        acc.value("byteOffset", static_cast<std::size_t>(0)) + (out.count - 1) * out.stride + elem > length))
    fail(ErrorCode::kDecodeFailure, "glTF accessor exceeds its buffer");
  out.base = buf.data() + offset;
  return out;
}

std::uint32_t read_index(const AccessorView& v, std::size_t i) {
  const std::uint8_t* p = v.base + i * v.stride;
  if (v.component == 5121) return *p;
  if (v.component == 5123) {
    std::uint16_t x;
    std::memcpy(&x, p, 2);
    return x;
  }
  std::uint32_t x;
  std::memcpy(&x, p, 4);
  return x;
}

}  // namespace

MeshObject load_gltf(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  json doc;
  std::vector<std::uint8_t> glb_bin;
  try {
    if (raw.size() >= 12 && raw.compare(0, 4, "glTF") == 0) {
      std::size_t pos = 12;
      while (pos + 8 <= raw.size()) {
        std::uint32_t len, type;
        std::memcpy(&len, raw.data() + pos, 4);
        std::memcpy(&type, raw.data() + pos + 4, 4);
        if (pos + 8 + len > raw.size()) fail(ErrorCode::kDecodeFailure, "truncated glb chunk");
        if (type == 0x4E4F534Au) doc = json::parse(raw.substr(pos + 8, len));
        if (type == 0x004E4942u) glb_bin = to_bytes(raw.substr(pos + 8, len));
        pos += 8 + len;
      }
      if (doc.is_null()) fail(ErrorCode::kDecodeFailure, "glb without JSON chunk");
    } else {
      doc = json::parse(raw);
    }

    std::vector<std::vector<std::uint8_t>> buffers;
    for (const json& b : doc.value("buffers", json::array())) {
      if (!b.contains("uri")) {
        buffers.push_back(glb_bin);
        continue;
      }
      const std::string uri = b.at("uri").get<std::string>();
      if (uri.rfind("data:", 0) == 0) {
        const auto comma = uri.find(";base64,");
        if (comma == std::string::npos) fail(ErrorCode::kDecodeFailure, "glTF data URI is not base64");
        buffers.push_back(base64_decode(std::string_view(uri).substr(comma + 8)));
      } else {
        buffers.push_back(to_bytes(read_text_file(path.parent_path() / uri)));
      }
    }

    MeshObject mesh;
    mesh.source = path.string();
    for (const json& m : doc.value("meshes", json::array())) {
      for (const json& prim : m.at("primitives")) {
        if (prim.value("mode", 4) != 4) continue;
        const AccessorView pos = accessor_view(doc, buffers, prim.at("attributes").at("POSITION").get<int>(), 3);
        if (pos.component != 5126) fail(ErrorCode::kDecodeFailure, "glTF POSITION must be float");
        const int base = static_cast<int>(mesh.vertices.size());
        for (std::size_t i = 0; i < pos.count; ++i) {
          float xyz[3];
          std::memcpy(xyz, pos.base + i * pos.stride, sizeof xyz);
          mesh.vertices.push_back({xyz[0], xyz[1], xyz[2]});
        }
        std::vector<std::uint32_t> idx;
        if (prim.contains("indices")) {
          const AccessorView iv = accessor_view(doc, buffers, prim.at("indices").get<int>(), 1);
          for (std::size_t i = 0; i < iv.count; ++i) idx.push_back(read_index(iv, i));
        } else {
          for (std::size_t i = 0; i < pos.count; ++i) idx.push_back(static_cast<std::uint32_t>(i));
        }
        for (std::size_t i = 0; i + 2 < idx.size(); i += 3) {
          for (int c = 0; c < 3; ++c)
            if (idx[i + c] >= pos.count) fail(ErrorCode::kDecodeFailure, "glTF index out of range");
          mesh.triangles.push_back({base + static_cast<int>(idx[i]), base + static_cast<int>(idx[i + 1]),
                                    base + static_cast<int>(idx[i + 2])});
        }
      }
    }
    finalize_mesh(mesh);
    return mesh;
  } catch (const json::exception& e) {
    fail(ErrorCode::kDecodeFailure, path.string() + ": " + e.what());
  }
}

MeshObject load_mesh(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return load_obj(path);
  if (ext == ".gltf" || ext == ".glb") return load_gltf(path);
  fail(ErrorCode::kInvalidArgument, "unsupported mesh format " + path.string());
}

void write_obj(const std::filesystem::path& path, const MeshObject& mesh) {
  std::ostringstream out;
  out.precision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  write_text_file(path, out.str());
}

MeshObject make_box_mesh(Vec3 size, Vec3 center) {
  MeshObject mesh;
  for (int i = 0; i < 8; ++i)
    mesh.vertices.push_back({center.x + ((i & 1) ? 0.5 : -0.5) * size.x, center.y + ((i & 2) ? 0.5 : -0.5) * size.y,
                             center.z + ((i & 4) ? 0.5 : -0.5) * size.z});
  mesh.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  finalize_mesh(mesh);
  return mesh;
}

Aabb3 posed_aabb(const MeshObject& mesh, const Pose3D& pose) {
  const Mat3 r = to_matrix(pose.rotation);
  Aabb3 box{pose.apply(mesh.vertices.at(0)), pose.apply(mesh.vertices.at(0))};
  for (const Vec3& v : mesh.vertices) {
    const Vec3 w = pose.position + r * (pose.scale * v);
    for (int i = 0; i < 3; ++i) {
      box.min[i] = std::min(box.min[i], w[i]);
      box.max[i] = std::max(box.max[i], w[i]);
    }
  }
  return box;
}

}  // namespace ocs
