#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ocsynth/scene/planner.hpp"
#include "ocsynth/util/encoding.hpp"
#include "support/rgbd.hpp"

using namespace ocs;

namespace {

const CameraIntrinsics kVga{500.0, 500.0, 320.0, 240.0, 640, 480};
const CameraIntrinsics kSmall{200.0, 200.0, 160.0, 120.0, 320, 240};

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ocsynth_scene_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<MeshObject> random_boxes(std::uint64_t seed, int n, double lo = 0.08, double hi = 0.25) {
  Rng rng(seed);
  std::vector<MeshObject> out;
  for (int i = 0; i < n; ++i) {
    MeshObject m = make_box_mesh({rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)});
    m.class_label = i % 3;
    m.instance_id = "obj" + std::to_string(i);
    m.source = "meshes/obj" + std::to_string(i) + ".obj";
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<MeshObject> meshes_of(const SceneDescription& s, const std::vector<MeshObject>& pool) {
  std::map<std::string, const MeshObject*> by_id;
  for (const auto& m : pool) by_id[m.instance_id] = &m;
  std::vector<MeshObject> out;
  for (const auto& o : s.objects) out.push_back(*by_id.at(o.instance_id));
  return out;
}

std::vector<std::vector<int>> support_inliers(const RgbdBackground& bg, const PlacementConfig& cfg) {
  std::vector<std::vector<int>> out;
  for (const auto& p : select_support_planes(bg.planes, cfg.up, cfg.horizontal_thresh_deg).horizontal)
    out.push_back(p.inliers);
  return out;
}

std::string camera_key(const SceneDescription& s) {
  const auto& c = s.camera;
  std::ostringstream out;
  out.precision(17);
  out << c.pose.position.x << ' ' << c.pose.position.y << ' ' << c.pose.position.z << ' ' << c.pose.rotation.x << ' '
      << c.pose.rotation.y << ' ' << c.pose.rotation.z << ' ' << c.pose.rotation.w << ' ' << c.zoom << ' ' << c.exposure_ev;
  return out.str();
}

}  // namespace

TEST_CASE("backproject follows the pinhole model") {
  DepthImage d{640, 480, std::vector<std::uint16_t>(640 * 480, 0)};
  d.mm[240 * 640 + 320] = 2000;
  d.mm[240 * 640 + 630] = 2000;
  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
  const PointCloud c = backproject(d, k);
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0] == Vec3{0.0, 0.0, 2.0});
  CHECK(c.points[1].x == doctest::Approx(310.0 * 2.0 / 500.0));
  CHECK(c.organized());

  // Principal point moved so that cx + 500 stays in frame.
  DepthImage e{700, 10, std::vector<std::uint16_t>(7000, 0)};
  e.mm[5 * 700 + 600] = 2000;
  const PointCloud c2 = backproject(e, {500.0, 500.0, 100.0, 5.0, 700, 10});
  CHECK(c2.points[0].x == doctest::Approx(2.0));

  const synth::RgbdScene plane = synth::render_planes({{{0, 0, 1}, -1.0, std::nullopt, false}}, kSmall, 0.0, 1);
  for (const Vec3& p : backproject(plane.depth, kSmall).points) CHECK(std::fabs(p.z - 1.0) <= 1e-3);

  DepthImage empty{4, 4, std::vector<std::uint16_t>(16, 0)};
  try {
    backproject(empty, {2, 2, 2, 2, 4, 4});
    FAIL("expected AllMissing");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kAllMissing);
  }
  CHECK_THROWS_AS(backproject(empty, {0, 2, 2, 2, 4, 4}), Error);
}

TEST_CASE("symmetric_eigen matches the Eigen oracle") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec3> pts;
    std::vector<int> idx;
    for (int i = 0; i < 50; ++i) {
      pts.push_back({rng.normal(0, 1), rng.normal(0, 0.5), rng.normal(2, 0.01 * (t + 1))});
      idx.push_back(i);
    }
    CHECK(fit_plane(pts, idx).mse == doctest::Approx(oracle::eigen_plane_mse(pts, idx)).epsilon(1e-9));
  }
}

TEST_CASE("detect_planes_ahc") {
  SUBCASE("noise-free frontal plane gives one plane") {
    const auto s = synth::render_planes({{{0, 0, 1}, -1.0, std::nullopt, false}}, kSmall, 0.0, 1);
    const PointCloud c = backproject(s.depth, kSmall);
    const auto planes = detect_planes_ahc(c);
    REQUIRE(planes.size() == 1);
    CHECK(rad2deg(std::acos(std::min(1.0, planes[0].normal.z))) <= 0.5);
    CHECK(std::fabs(planes[0].d + 1.0) <= 0.002);
    CHECK(planes[0].inliers.size() == c.points.size());
  }
  SUBCASE("floor and wall with 2mm noise") {
    const auto s = synth::render_planes({{{0, 1, 0}, -1.2, std::nullopt, true}, {{0, 0, 1}, -3.0, std::nullopt, false}}, kSmall, 0.002, 9);
    const PointCloud c = backproject(s.depth, kSmall);
    const auto planes = detect_planes_ahc(c);
    const auto ev = oracle::evaluate_planes(s, c, planes);
    CHECK(planes.size() == 2);
    CHECK(ev.spurious == 0);
    for (const auto& m : ev.gt) {
      CHECK(m.detected >= 0);
      CHECK(m.normal_err_deg <= 2.0);
      CHECK(m.recall >= 0.95);
    }
    for (const auto& p : planes) {
      CHECK(std::fabs(norm(p.normal) - 1.0) < 1e-12);
      CHECK(dot(p.normal, p.centroid) > 0.0);
      CHECK(std::fabs(p.mse - oracle::eigen_plane_mse(c.points, p.inliers)) <= 1e-9);
      CHECK(p.hull.size() >= 3);
    }
  }
  SUBCASE("uniform noise has no planes") {
    Rng rng(3);
    DepthImage d{kSmall.width, kSmall.height, {}};
    for (int i = 0; i < d.width * d.height; ++i) d.mm.push_back(static_cast<std::uint16_t>(rng.uniform_int(1000, 2000)));
    PlaneParams p;
    p.min_inliers = 500;
    p.merge_mse_max = 1e-4;
    CHECK(detect_planes_ahc(backproject(d, kSmall), p).empty());
  }
  SUBCASE("unorganized cloud is rejected") {
    PointCloud c;
    c.points = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
    try {
      detect_planes_ahc(c);
      FAIL("expected Unorganized");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnorganized);
    }
  }
  SUBCASE("random rooms") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto s = synth::random_room(seed, kSmall, 0.002);
      const PointCloud c = backproject(s.depth, kSmall);
      const auto planes = detect_planes_ahc(c);
      const auto ev = oracle::evaluate_planes(s, c, planes);
      CAPTURE(seed);
      CHECK(ev.spurious == 0);
      for (const auto& m : ev.gt) {
        CHECK(m.detected >= 0);
        CHECK(m.normal_err_deg <= 2.0);
        CHECK(m.recall >= 0.95);
      }
      const SupportPlanes sp = select_support_planes(planes);
      const auto& floor = sp.horizontal[sp.floor];
      CHECK(floor.normal.y > 0.99);
      CHECK(std::fabs(floor.d - s.planes[0].d) < 0.02);
    }
  }
}

TEST_CASE("select_support_planes") {
  auto plane = [](Vec3 n, double d) {
    PlaneModel p;
    p.normal = normalized(n);
    p.d = d;
    return p;
  };
  SUBCASE("only the horizontal plane qualifies") {
    const auto sp = select_support_planes({plane({0, 0, 1}, 0.0), plane({1, 0, 0}, -2.0)}, UpAxis{2, 1.0});
    REQUIRE(sp.horizontal.size() == 1);
    CHECK(sp.horizontal[sp.floor].normal == Vec3{0, 0, 1});
  }
  SUBCASE("lowest horizontal plane is the floor") {
    // z-up planes at heights 0.8 and 0.
    const auto sp = select_support_planes({plane({0, 0, 1}, -0.8), plane({0, 0, -1}, 0.0)}, UpAxis{2, 1.0});
    REQUIRE(sp.horizontal.size() == 2);
    CHECK(sp.horizontal[sp.floor].d == 0.0);
    // Camera convention: up = -y, floor at y = 1.2, table at y = 0.5.
    const auto cam = select_support_planes({plane({0, 1, 0}, -0.5), plane({0, 1, 0}, -1.2)});
    CHECK(cam.horizontal[cam.floor].d == -1.2);
  }
  SUBCASE("angle threshold is inclusive at 10 degrees") {
    const Vec3 n9{std::sin(deg2rad(9)), -std::cos(deg2rad(9)), 0};
    const Vec3 n11{std::sin(deg2rad(11)), -std::cos(deg2rad(11)), 0};
    const auto sp = select_support_planes({plane(n9, 1.0), plane(n11, 1.0)});
    REQUIRE(sp.horizontal.size() == 1);
    CHECK(sp.horizontal[0].normal == normalized(n9));
  }
  SUBCASE("no horizontal plane") {
    try {
      select_support_planes({plane({0, 0, 1}, -2.0)});
      FAIL("expected NoHorizontalPlane");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoHorizontalPlane);
    }
  }
}

TEST_CASE("aabb_collide") {
  const Aabb3 a{{0, 0, 0}, {1, 1, 1}};
  CHECK(aabb_collide(a, a));
  CHECK_FALSE(aabb_collide(a, {{1, 0, 0}, {2, 1, 1}}));
  CHECK(aabb_collide(a, {{0.999, 0.5, 0.5}, {2, 2, 2}}));
  Rng rng(11);
  int hits = 0;
  for (int t = 0; t < 1000; ++t) {
    Aabb3 b[2];
    for (auto& box : b)
      for (int i = 0; i < 3; ++i) {
        // Quantized so touching faces occur.
        const double lo = rng.uniform_int(0, 8) * 0.25, hi = lo + rng.uniform_int(1, 4) * 0.25;
        box.min[i] = lo, box.max[i] = hi;
      }
    bool oracle = true;
    for (int i = 0; i < 3; ++i) oracle = oracle && b[0].min[i] < b[1].max[i] && b[1].min[i] < b[0].max[i];
    CHECK(aabb_collide(b[0], b[1]) == oracle);
    hits += oracle;
  }
  CHECK(hits > 50);
}

TEST_CASE("project_bbox") {
  const CameraPose cam{};
  SUBCASE("cube with its front face at z=2") {
    const MeshObject cube = make_box_mesh({1, 1, 1});
    const auto box = project_bbox(cube, {{0, 0, 2.5}, {}, 1.0}, cam, kVga);
    REQUIRE(box);
    CHECK(std::fabs(box->width() - 250.0) <= 1.0);
    CHECK(std::fabs(0.5 * (box->x_min + box->x_max) - 320.0) < 1e-9);
    CHECK(std::fabs(0.5 * (box->y_min + box->y_max) - 240.0) < 1e-9);
  }
  SUBCASE("cube centred at z=2 spans its nearer face") {
    const auto box = project_bbox(make_box_mesh({1, 1, 1}), {{0, 0, 2}, {}, 1.0}, cam, kVga);
    REQUIRE(box);
    CHECK(box->width() == doctest::Approx(2 * 500.0 * 0.5 / 1.5));
  }
  SUBCASE("behind the camera") {
    CHECK_FALSE(project_bbox(make_box_mesh({1, 1, 1}), {{0, 0, -3}, {}, 1.0}, cam, kVga));
  }
  SUBCASE("outside the frame") {
    CHECK_FALSE(project_bbox(make_box_mesh({0.1, 0.1, 0.1}), {{10, 0, 2}, {}, 1.0}, cam, kVga));
  }
  SUBCASE("camera inside the object is clipped, never inverted") {
    const auto box = project_bbox(make_box_mesh({1, 1, 1}), {}, cam, kVga);
    REQUIRE(box);
    CHECK(box->valid());
    CHECK(*box == BBox{0, 0, 640, 480});
    // Straddling the near plane off-axis gives a partial box.
    const auto side = project_bbox(make_box_mesh({0.2, 0.2, 1}), {{0.3, 0, 0.3}, {}, 1.0}, cam, kVga);
    REQUIRE(side);
    CHECK(side->valid());
    CHECK(side->x_min > 320.0);
    CHECK(side->x_max == 640.0);
  }
  SUBCASE("zoom doubles the width on axis") {
    const MeshObject m = make_box_mesh({0.2, 0.3, 0.1});
    const Pose3D pose{{0, 0, 3}, axis_angle({1, 2, 3}, 0.7), 1.0};
    const auto a = project_bbox(m, pose, cam, kVga);
    const auto b = project_bbox(m, pose, cam, kVga.zoomed(2.0));
    REQUIRE(a);
    REQUIRE(b);
    CHECK(std::fabs(b->width() - 2.0 * a->width()) <= 1.0);
  }
  SUBCASE("boxes match a vertex-projection oracle when fully in front") {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
      const MeshObject m = make_box_mesh({rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5)});
      const Pose3D pose{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1.5, 5)}, random_rotation(rng), 1.0};
      double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
      for (const Vec3& v : m.vertices) {
        const Vec3 p = pose.apply(v);
        x0 = std::min(x0, 500 * p.x / p.z + 320), x1 = std::max(x1, 500 * p.x / p.z + 320);
        y0 = std::min(y0, 500 * p.y / p.z + 240), y1 = std::max(y1, 500 * p.y / p.z + 240);
      }
      const auto expect = clip_to_frame({x0, y0, x1, y1}, 640, 480);
      const auto got = project_bbox(m, pose, cam, kVga);
      REQUIRE(expect.has_value() == got.has_value());
      if (got) {
        CHECK(got->x_min == doctest::Approx(expect->x_min).epsilon(1e-12));
        CHECK(got->y_max == doctest::Approx(expect->y_max).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("look_at produces an orthonormal camera") {
  const CameraPose p = look_at({1, -1, 0}, {0, 0, 3}, {0, 1, 0});
  const Vec3 fwd = to_matrix(p.rotation) * Vec3{0, 0, 1};
  const Vec3 want = normalized(Vec3{0, 0, 3} - Vec3{1, -1, 0});
  CHECK(norm(fwd - want) < 1e-12);
  CHECK(std::fabs(norm(p.rotation) - 1.0) < 1e-12);
  CHECK(norm(p.to_camera({0, 0, 3}) - Vec3{0, 0, norm(Vec3{-1, 1, 3})}) < 1e-12);
  const Quat back = from_matrix(to_matrix(p.rotation));
  CHECK(std::fabs(std::fabs(back.x * p.rotation.x + back.y * p.rotation.y + back.z * p.rotation.z + back.w * p.rotation.w) - 1.0) < 1e-12);
}

TEST_CASE("size_feasible") {
  CHECK_FALSE(size_feasible({0, 0, 640, 480}, 640, 480));
  CHECK(size_feasible({0, 0, 384, 320}, 640, 480));  // 0.4 exactly
  CHECK_FALSE(size_feasible({0, 0, 385, 320}, 640, 480));
  CHECK(size_feasible({0, 0, 48, 32}, 640, 480));  // 0.005 exactly
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const double x0 = rng.uniform(0, 600), y0 = rng.uniform(0, 440);
    const BBox b{x0, y0, x0 + rng.uniform(1, 640 - x0), y0 + rng.uniform(1, 480 - y0)};
    const double frac = (b.x_max - b.x_min) * (b.y_max - b.y_min) / (640.0 * 480.0);
    CHECK(size_feasible(b, 640, 480, 0.01, 0.3) == (frac >= 0.01 && frac <= 0.3));
  }
}

TEST_CASE("mesh loaders") {
  const auto dir = temp_dir("mesh");
  const MeshObject box = make_box_mesh({0.1, 0.2, 0.3}, {0.05, 0, 0});
  CHECK(box.aabb == Aabb3{{0, -0.1, -0.15}, {0.1, 0.1, 0.15}});

  SUBCASE("OBJ round trip, polygons and negative indices") {
    write_obj(dir / "box.obj", box);
    const MeshObject loaded = load_mesh(dir / "box.obj");
    CHECK(loaded.vertices == box.vertices);
    CHECK(loaded.triangles == box.triangles);
    CHECK(loaded.source == (dir / "box.obj").string());
    std::ofstream(dir / "quad.obj") << "# tetra with a quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\n"
                                       "vt 0 0\nf 1/1 2/1 3/1 4/1\nf -1 -4 -3\n";
    const MeshObject quad = load_obj(dir / "quad.obj");
    CHECK(quad.triangles.size() == 3);
    CHECK(quad.triangles[2] == std::array<int, 3>{4, 1, 2});
  }
  SUBCASE("coplanar or malformed meshes are rejected") {
    std::ofstream(dir / "flat.obj") << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\n";
    CHECK_THROWS_AS(load_obj(dir / "flat.obj"), Error);
    std::ofstream(dir / "bad.obj") << "v 0 0\n";
    CHECK_THROWS_AS(load_obj(dir / "bad.obj"), Error);
    CHECK_THROWS_AS(load_mesh(dir / "box.stl"), Error);
    CHECK_THROWS_AS(load_mesh(dir / "missing.obj"), Error);
  }
  SUBCASE("glTF with an embedded buffer and glb") {
    std::vector<std::uint8_t> bin;
    auto put = [&](const void* p, std::size_t n) {
      const auto* b = static_cast<const std::uint8_t*>(p);
      bin.insert(bin.end(), b, b + n);
    };
    for (const Vec3& v : box.vertices) {
      const float f[3] = {static_cast<float>(v.x), static_cast<float>(v.y), static_cast<float>(v.z)};
      put(f, sizeof f);
    }
    for (const auto& t : box.triangles)
      for (int i : t) {
        const auto s = static_cast<std::uint16_t>(i);
        put(&s, 2);
      }
    const std::string views = R"("bufferViews":[{"buffer":0,"byteOffset":0,"byteLength":96},{"buffer":0,"byteOffset":96,"byteLength":72}],)"
                              R"("accessors":[{"bufferView":0,"componentType":5126,"count":8,"type":"VEC3"},)"
                              R"({"bufferView":1,"componentType":5123,"count":36,"type":"SCALAR"}],)"
                              R"("meshes":[{"primitives":[{"attributes":{"POSITION":0},"indices":1}]}])";
    std::ofstream(dir / "box.gltf") << R"({"asset":{"version":"2.0"},"buffers":[{"byteLength":168,"uri":"data:application/octet-stream;base64,)"
                                    << base64_encode(bin) << R"("}],)" << views << "}";
    const MeshObject g = load_mesh(dir / "box.gltf");
    REQUIRE(g.vertices.size() == 8);
    CHECK(g.triangles == box.triangles);
    CHECK(std::fabs(g.aabb.max.z - 0.15) < 1e-7);

    std::string json = R"({"asset":{"version":"2.0"},"buffers":[{"byteLength":168}],)" + views + "}";
    while (json.size() % 4) json += ' ';
    std::string glb = "glTF";
    auto u32 = [&](std::uint32_t x) { glb.append(reinterpret_cast<const char*>(&x), 4); };
    u32(2);
    u32(static_cast<std::uint32_t>(12 + 8 + json.size() + 8 + bin.size()));
    u32(static_cast<std::uint32_t>(json.size()));
    u32(0x4E4F534Au);
    glb += json;
    u32(static_cast<std::uint32_t>(bin.size()));
    u32(0x004E4942u);
    glb.append(bin.begin(), bin.end());
    std::ofstream(dir / "box.glb", std::ios::binary) << glb;
    const MeshObject b = load_mesh(dir / "box.glb");
    CHECK(b.vertices == g.vertices);
    CHECK(b.triangles == g.triangles);
  }
}

TEST_CASE("plan_scene_3dcp") {
  PlacementConfig cfg;
  SUBCASE("single object on a big floor rests on it") {
    const auto s = synth::render_planes({{{0, 1, 0}, -1.2, std::nullopt, true}}, kVga, 0.0, 1, 5.0);
    const RgbdBackground bg = make_rgbd_background(s.depth, kVga);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto objs = random_boxes(seed, 1, 0.15, 0.3);
      const SceneDescription scene = plan_scene_3dcp(bg, objs, cfg, seed);
      REQUIRE(scene.objects.size() == 1);
      // Floor at y = 1.2 with up = -y: the AABB bottom is its max y.
      CHECK(std::fabs(scene.objects[0].aabb.max.y - 1.2) <= 0.001);
      CHECK(scene.planes.size() == 1);
      CHECK(scene.planes[0].floor);
      CHECK(scene.annotations.size() == 1);
    }
  }
  SUBCASE("objects larger than half the plane: at most one fits") {
    // A bounded 0.6 m table top as the only horizontal plane, seen from above.
    const auto s = synth::render_planes(
        {{{0, 1, 0}, -0.8, Aabb3{{-0.3, -1, 1.2}, {0.3, 1, 1.8}}, true}, {{0, 0, 1}, -4.0, std::nullopt, false}}, kSmall, 0.0, 1);
    const RgbdBackground bg = make_rgbd_background(s.depth, kSmall);
    PlacementConfig c = cfg;
    c.full_rotation = false;
    c.max_frac = 1.0;
    int placed_one = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::vector<MeshObject> objs = random_boxes(seed, 2, 0.35, 0.4);
      try {
        const SceneDescription scene = plan_scene_3dcp(bg, objs, c, seed);
        CHECK(scene.objects.size() <= 1);
        placed_one += scene.objects.size() == 1;
        const auto v = oracle::check_scene(scene, meshes_of(scene, objs), &bg.cloud, support_inliers(bg, c), 0.005, 1.0);
        CHECK(v.collisions == 0);
        CHECK(v.intrusions == 0);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kEmptyScene);
      }
    }
    CHECK(placed_one > 0);
  }
  SUBCASE("random rooms pass the brute-force post-check") {
    int placed = 0, multi_surface = 0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
      const auto room = synth::random_room(seed, kSmall, 0.002);
      const RgbdBackground bg = make_rgbd_background(room.depth, kSmall);
      const auto objs = random_boxes(seed * 7 + 1, 5);
      const SceneDescription scene = plan_scene_3dcp(bg, objs, cfg, seed);
      const auto v = oracle::check_scene(scene, meshes_of(scene, objs), &bg.cloud, support_inliers(bg, cfg));
      CAPTURE(seed);
      CHECK(v.collisions == 0);
      CHECK(v.intrusions == 0);
      CHECK(v.infeasible == 0);
      CHECK(v.mismatched == 0);
      CHECK(v.min_gap >= -1e-9);
      CHECK(v.max_gap <= 0.002);
      placed += static_cast<int>(scene.objects.size());
      std::set<int> surfaces;
      for (const auto& o : scene.objects) surfaces.insert(o.support_plane);
      multi_surface += surfaces.size() > 1;
    }
    CHECK(placed > 24);
    CHECK(multi_surface > 0);
  }
  SUBCASE("deterministic and JSON round-trips exactly") {
    const auto room = synth::random_room(3, kSmall, 0.002);
    RgbdBackground bg = make_rgbd_background(room.depth, kSmall);
    bg.rgb = "bg/0003.png";
    bg.depth = "bg/0003_depth.png";
    const auto objs = random_boxes(3, 4);
    const SceneDescription a = plan_scene_3dcp(bg, objs, cfg, 42);
    const SceneDescription b = plan_scene_3dcp(bg, objs, cfg, 42);
    CHECK(scene_to_json(a) == scene_to_json(b));
    const SceneDescription c = scene_from_json(scene_to_json(a));
    CHECK(scene_to_json(c) == scene_to_json(a));
    CHECK(c.background.rgb == "bg/0003.png");
    CHECK(oracle::check_scene(c, meshes_of(c, objs), nullptr, {}).mismatched == 0);
    CHECK(scene_to_json(plan_scene_3dcp(bg, objs, cfg, 43)) != scene_to_json(a));
  }
  SUBCASE("errors") {
    const auto wall = synth::render_planes({{{0, 0, 1}, -2.0, std::nullopt, false}}, kSmall, 0.0, 1);
    const RgbdBackground bg = make_rgbd_background(wall.depth, kSmall);
    try {
      plan_scene_3dcp(bg, random_boxes(1, 1), cfg, 1);
      FAIL("expected NoHorizontalPlane");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoHorizontalPlane);
    }
    const auto floor = synth::floor_scene(kSmall, 1.2, 0.0, 1);
    const RgbdBackground fb = make_rgbd_background(floor.depth, kSmall);
    try {
      plan_scene_3dcp(fb, random_boxes(1, 1, 5.0, 6.0), cfg, 1);
      FAIL("expected EmptyScene");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyScene);
    }
    CHECK_THROWS_AS(plan_scene_3dcp(fb, {}, cfg, 1), Error);
  }
}

TEST_CASE("plan_scene_3drp") {
  ViewConfig cfg;
  cfg.views_per_scene = 5;
  SUBCASE("multi-view contract") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto objs = random_boxes(seed, 4, 0.1, 0.4);
      const auto views = plan_scene_3drp("hdri/studio.hdr", objs, cfg, seed);
      REQUIRE(views.size() == 5);
      std::set<std::string> cameras;
      for (const auto& v : views) {
        CAPTURE(seed);
        CHECK(v.objects.size() == views[0].objects.size());
        for (std::size_t i = 0; i < v.objects.size(); ++i) CHECK(v.objects[i].pose == views[0].objects[i].pose);
        cameras.insert(camera_key(v));
        const auto check = oracle::check_scene(v, meshes_of(v, objs), nullptr, {});
        CHECK(check.collisions == 0);
        CHECK(check.infeasible == 0);
        CHECK(check.mismatched == 0);
        CHECK(v.camera.zoom >= cfg.zoom_min);
        CHECK(v.camera.zoom <= cfg.zoom_max);
        CHECK(v.camera.exposure_ev >= -1.0);
        CHECK(v.camera.exposure_ev <= 1.0);
        CHECK(v.lighting.type == "hdri");
        for (const auto& o : v.objects) {
          const Vec3 c = 0.5 * (o.aabb.min + o.aabb.max);
          CHECK(c.z >= cfg.z_min - 1e-9);
          CHECK(c.z <= cfg.z_max + 1e-9);
        }
      }
      CHECK(cameras.size() == 5);
    }
  }
  SUBCASE("deterministic") {
    const auto objs = random_boxes(8, 3);
    const auto a = plan_scene_3drp("h.hdr", objs, cfg, 8);
    const auto b = plan_scene_3drp("h.hdr", objs, cfg, 8);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(scene_to_json(a[i]) == scene_to_json(b[i]));
  }
  SUBCASE("impossible sizes give EmptyScene") {
    try {
      plan_scene_3drp("h.hdr", random_boxes(1, 2, 20.0, 30.0), cfg, 1);
      FAIL("expected EmptyScene");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyScene);
    }
  }
  SUBCASE("config validation") {
    ViewConfig bad = cfg;
    bad.views_per_scene = 0;
    CHECK_THROWS_AS(plan_scene_3drp("h.hdr", random_boxes(1, 1), bad, 1), Error);
    bad = cfg;
    bad.z_min = 5.0;
    CHECK_THROWS_AS(plan_scene_3drp("h.hdr", random_boxes(1, 1), bad, 1), Error);
  }
}

TEST_CASE("scene JSON rejects a foreign schema version") {
  SceneDescription s;
  s.method = "3drp";
  s.background = {"hdri", "", "", "h.hdr"};
  s.camera.intrinsics = kVga;
  std::string text = scene_to_json(s);
  CHECK(scene_from_json(text).background.hdri == "h.hdr");
  text.replace(text.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  CHECK_THROWS_AS(scene_from_json(text), Error);
  CHECK_THROWS_AS(scene_from_json("{}"), Error);
}
