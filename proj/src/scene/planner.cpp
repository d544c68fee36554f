#include "ocsynth/scene/planner.hpp"

#include <algorithm>
#include <cmath>

#include "ocsynth/imaging/io.hpp"

namespace ocs {

namespace {

void check_range(double lo, double hi, const char* name) {
  if (!(lo <= hi)) fail(ErrorCode::kInvalidArgument, std::string(name) + " range is inverted");
}

void check_common(int attempts, double scale_min, double scale_max, double min_frac, double max_frac) {
  if (attempts < 1) fail(ErrorCode::kInvalidArgument, "max_attempts must be >= 1");
  if (!(scale_min > 0.0)) fail(ErrorCode::kInvalidArgument, "scale must be positive");
  check_range(scale_min, scale_max, "scale");
  if (!(min_frac >= 0.0 && max_frac <= 1.0)) fail(ErrorCode::kInvalidArgument, "size fractions must lie in [0,1]");
  check_range(min_frac, max_frac, "size fraction");
}

// Horizontal support candidate in up-aligned coordinates.
struct Support {
  PlaneModel plane;
  std::vector<std::array<double, 2>> footprint;  // hull in (horizontal[0], horizontal[1])
};

double plane_height(const PlaneModel& p, const UpAxis& up, double a, double b) {
  const auto h = up.horizontal();
  const double along = -(p.d + p.normal[h[0]] * a + p.normal[h[1]] * b) / p.normal[up.axis];
  return up.sign * along;
}

std::optional<std::array<double, 2>> sample_in_polygon(const std::vector<std::array<double, 2>>& poly, Rng& rng) {
  double x0 = poly[0][0], x1 = x0, y0 = poly[0][1], y1 = y0;
  for (const auto& p : poly) {
    x0 = std::min(x0, p[0]), x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]), y1 = std::max(y1, p[1]);
  }
  for (int i = 0; i < 64; ++i) {
    const std::array<double, 2> p{rng.uniform(x0, x1), rng.uniform(y0, y1)};
    if (point_in_convex(poly, p)) return p;
  }
  return std::nullopt;
}

std::vector<Vec3> rotated_vertices(const MeshObject& mesh, Quat q, double scale) {
  const Mat3 r = to_matrix(q);
  std::vector<Vec3> out;
  out.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) out.push_back(r * (scale * v));
  return out;
}

Aabb3 bounds(const std::vector<Vec3>& pts) {
  Aabb3 b{pts[0], pts[0]};
  for (const Vec3& p : pts)
    for (int i = 0; i < 3; ++i) b.min[i] = std::min(b.min[i], p[i]), b.max[i] = std::max(b.max[i], p[i]);
  return b;
}

// True when any cloud point other than the support plane's own inliers lies
// strictly inside `box`. Only pixels under the box's projection are visited.
bool intrudes(const RgbdBackground& bg, const std::vector<int>& grid, const std::vector<int>& point_plane,
              int support, const Aabb3& box) {
  const CameraIntrinsics& k = bg.intrinsics;
  int u0 = 0, u1 = k.width - 1, v0 = 0, v1 = k.height - 1;
  bool front = true;
  double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
  for (int c = 0; c < 8; ++c) {
    const Vec3 p{(c & 1) ? box.max.x : box.min.x, (c & 2) ? box.max.y : box.min.y, (c & 4) ? box.max.z : box.min.z};
    if (p.z <= 1e-9) {
      front = false;
      break;
    }
    const double u = k.fx * p.x / p.z + k.cx, v = k.fy * p.y / p.z + k.cy;
    umin = std::min(umin, u), umax = std::max(umax, u), vmin = std::min(vmin, v), vmax = std::max(vmax, v);
  }
  if (front) {
    if (umax < -1 || vmax < -1 || umin > k.width + 1 || vmin > k.height + 1) return false;
    u0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
    u1 = std::min(k.width - 1, static_cast<int>(std::ceil(umax)) + 1);
    v0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
    v1 = std::min(k.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
  }
  for (int v = v0; v <= v1; ++v)
    for (int u = u0; u <= u1; ++u) {
      const int i = grid[static_cast<std::size_t>(v) * k.width + u];
      if (i >= 0 && point_plane[i] != support && aabb_contains(box, bg.cloud.points[i])) return true;
    }
  return false;
}

// Every footprint corner and the centre must see an inlier of the support
// plane within two pixels of its projection, so merged coplanar patches do
// not lend support across gaps or occluded regions.
bool visibly_supported(const RgbdBackground& bg, const std::vector<int>& grid, const std::vector<int>& point_plane,
                       int support, const PlaneModel& plane, const UpAxis& up, const Aabb3& box) {
  const CameraIntrinsics& k = bg.intrinsics;
  const auto hz = up.horizontal();
  for (int c = 0; c < 5; ++c) {
    Vec3 p;
    p[hz[0]] = c == 4 ? 0.5 * (box.min[hz[0]] + box.max[hz[0]]) : (c & 1) ? box.max[hz[0]] : box.min[hz[0]];
    p[hz[1]] = c == 4 ? 0.5 * (box.min[hz[1]] + box.max[hz[1]]) : (c & 2) ? box.max[hz[1]] : box.min[hz[1]];
    p[up.axis] = up.sign * plane_height(plane, up, p[hz[0]], p[hz[1]]);
    if (p.z <= kNearPlane) return false;
    const int u = static_cast<int>(std::lround(k.fx * p.x / p.z + k.cx));
    const int v = static_cast<int>(std::lround(k.fy * p.y / p.z + k.cy));
    bool seen = false;
    for (int dv = -2; dv <= 2 && !seen; ++dv)
      for (int du = -2; du <= 2 && !seen; ++du) {
        const int x = u + du, y = v + dv;
        if (x < 0 || y < 0 || x >= k.width || y >= k.height) continue;
        const int i = grid[static_cast<std::size_t>(y) * k.width + x];
        seen = i >= 0 && point_plane[i] == support;
      }
    if (!seen) return false;
  }
  return true;
}

}  // namespace

RgbdBackground make_rgbd_background(const DepthImage& depth, const CameraIntrinsics& intrinsics,
                                    const PlaneParams& params) {
  RgbdBackground bg;
  bg.intrinsics = intrinsics;
  bg.cloud = backproject(depth, intrinsics);
  bg.planes = detect_planes_ahc(bg.cloud, params);
  return bg;
}

RgbdBackground load_rgbd_background(const std::filesystem::path& rgb, const std::filesystem::path& depth,
                                    const CameraIntrinsics& intrinsics, const PlaneParams& params) {
  RgbdBackground bg = make_rgbd_background(io::read_depth(depth), intrinsics, params);
  bg.rgb = rgb.string();
  bg.depth = depth.string();
  return bg;
}

void PlacementConfig::validate() const {
  planes.validate();
  check_common(max_attempts, scale_min, scale_max, min_frac, max_frac);
  if (!(horizontal_thresh_deg >= 0.0 && horizontal_thresh_deg < 90.0))
    fail(ErrorCode::kInvalidArgument, "horizontal threshold must lie in [0,90)");
  if (!(clearance >= 0.0)) fail(ErrorCode::kInvalidArgument, "clearance must be non-negative");
}

void ViewConfig::validate() const {
  intrinsics.validate();
  check_common(max_attempts, scale_min, scale_max, min_frac, max_frac);
  if (!(z_min > kNearPlane)) fail(ErrorCode::kInvalidArgument, "z_min must exceed the near plane");
  check_range(z_min, z_max, "depth");
  if (views_per_scene < 1) fail(ErrorCode::kInvalidArgument, "views_per_scene must be >= 1");
  check_range(azimuth_min, azimuth_max, "azimuth");
  check_range(elevation_min, elevation_max, "elevation");
  if (!(elevation_min > -89.0 && elevation_max < 89.0))
    fail(ErrorCode::kInvalidArgument, "elevation must lie in (-89,89) degrees");
  if (!(zoom_min > 0.0)) fail(ErrorCode::kInvalidArgument, "zoom must be positive");
  check_range(zoom_min, zoom_max, "zoom");
  check_range(ev_min, ev_max, "exposure");
}

SceneDescription plan_scene_3dcp(const RgbdBackground& bg, const std::vector<MeshObject>& objects,
                                 const PlacementConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (objects.empty()) fail(ErrorCode::kInvalidArgument, "no objects to place");
  if (!bg.cloud.organized()) fail(ErrorCode::kUnorganized, "background cloud lacks pixel origins");
  const SupportPlanes sp = select_support_planes(bg.planes, cfg.up, cfg.horizontal_thresh_deg);
  const auto hz = cfg.up.horizontal();
  const int ax = cfg.up.axis;

  std::vector<Support> supports;
  std::vector<int> point_plane(bg.cloud.points.size(), -1);
  for (std::size_t s = 0; s < sp.horizontal.size(); ++s) {
    const PlaneModel& p = sp.horizontal[s];
    std::vector<std::array<double, 2>> pts;
    for (const auto& uv : p.hull) {
      const Vec3 w = p.from_plane(uv[0], uv[1]);
      pts.push_back({w[hz[0]], w[hz[1]]});
    }
    supports.push_back({p, convex_hull(std::move(pts))});
    for (int i : p.inliers) point_plane[i] = static_cast<int>(s);
  }
  std::vector<int> grid(static_cast<std::size_t>(bg.intrinsics.width) * bg.intrinsics.height, -1);
  for (std::size_t i = 0; i < bg.cloud.points.size(); ++i) grid[bg.cloud.pixel[i]] = static_cast<int>(i);

  SceneDescription scene;
  scene.method = "3dcp";
  scene.seed = seed;
  scene.background = {"rgbd", bg.rgb, bg.depth, ""};
  scene.camera.intrinsics = bg.intrinsics;
  for (std::size_t s = 0; s < supports.size(); ++s) {
    const PlaneModel& p = supports[s].plane;
    scene.planes.push_back({p.normal, p.d, p.mse, static_cast<int>(p.inliers.size()), static_cast<int>(s) == sp.floor});
  }

  Rng rng(seed);
  const Vec3 up = cfg.up.vector();
  for (const MeshObject& mesh : objects) {
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const int si = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(supports.size()) - 1));
      const Support& sup = supports[si];
      const auto spot = sup.footprint.size() >= 3 ? sample_in_polygon(sup.footprint, rng) : std::nullopt;
      const Quat q = cfg.full_rotation ? random_rotation(rng) : axis_angle(up, rng.uniform(0.0, 2.0 * kPi));
      const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
      if (!spot) continue;

      const std::vector<Vec3> rv = rotated_vertices(mesh, q, scale);
      const Aabb3 rb = bounds(rv);
      Vec3 t;
      t[hz[0]] = (*spot)[0] - 0.5 * (rb.min[hz[0]] + rb.max[hz[0]]);
      t[hz[1]] = (*spot)[1] - 0.5 * (rb.min[hz[1]] + rb.max[hz[1]]);
      // Lift until the lowest vertex touches the plane.
      double lift = -1e300;
      for (const Vec3& r : rv)
        lift = std::max(lift, plane_height(sup.plane, cfg.up, r[hz[0]] + t[hz[0]], r[hz[1]] + t[hz[1]]) - cfg.up.sign * r[ax]);
      t[ax] = cfg.up.sign * lift;

      const Pose3D pose{t, q, scale};
      const Aabb3 box = posed_aabb(mesh, pose);
      bool fits = true;
      for (int c = 0; c < 4 && fits; ++c) {
        const std::array<double, 2> corner{(c & 1) ? box.max[hz[0]] : box.min[hz[0]], (c & 2) ? box.max[hz[1]] : box.min[hz[1]]};
        fits = point_in_convex(sup.footprint, corner);
      }
      if (!fits || !visibly_supported(bg, grid, point_plane, si, sup.plane, cfg.up, box)) continue;
      bool collides = false;
      for (const SceneObject& o : scene.objects) collides = collides || aabb_collide(o.aabb, box);
      if (collides) continue;
      Aabb3 clear = box;
      for (int h : hz) clear.min[h] -= cfg.clearance, clear.max[h] += cfg.clearance;
      (cfg.up.sign > 0 ? clear.max[ax] : clear.min[ax]) += cfg.up.sign * cfg.clearance;
      if (intrudes(bg, grid, point_plane, si, clear)) continue;
      const auto bbox = project_bbox(mesh, pose, scene.camera.pose, scene.camera.intrinsics);
      if (!bbox || !size_feasible(*bbox, bg.intrinsics.width, bg.intrinsics.height, cfg.min_frac, cfg.max_frac)) continue;

      scene.annotations.push_back({static_cast<int>(scene.objects.size()), mesh.class_label, *bbox});
      scene.objects.push_back({mesh.source, mesh.class_label, mesh.instance_id, pose, si, box});
      break;
    }
  }
  if (scene.objects.empty()) fail(ErrorCode::kEmptyScene, "no object could be placed");
  return scene;
}

std::vector<SceneDescription> plan_scene_3drp(const std::string& hdri, const std::vector<MeshObject>& objects,
                                              const ViewConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (objects.empty()) fail(ErrorCode::kInvalidArgument, "no objects to place");
  const CameraIntrinsics& k = cfg.intrinsics;
  Rng rng(seed);

  SceneDescription base;
  base.method = "3drp";
  base.seed = seed;
  base.background = {"hdri", "", "", hdri};
  base.lighting = {"hdri", hdri, {1.0, 1.0, 1.0}, 1.0, 0.0};
  base.camera.intrinsics = k;
  std::vector<const MeshObject*> placed;
  for (const MeshObject& mesh : objects) {
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
      const double z = rng.uniform(cfg.z_min, cfg.z_max);
      const double u = rng.uniform(0.0, k.width), v = rng.uniform(0.0, k.height);
      const Quat q = random_rotation(rng);
      const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
      const Vec3 center{(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
      const Aabb3 rb = bounds(rotated_vertices(mesh, q, scale));
      const Pose3D pose{center - 0.5 * (rb.min + rb.max), q, scale};
      const Aabb3 box = posed_aabb(mesh, pose);
      bool collides = false;
      for (const SceneObject& o : base.objects) collides = collides || aabb_collide(o.aabb, box);
      if (collides) continue;
      const auto bbox = project_bbox(mesh, pose, base.camera.pose, k);
      if (!bbox || !size_feasible(*bbox, k.width, k.height, cfg.min_frac, cfg.max_frac)) continue;
      base.objects.push_back({mesh.source, mesh.class_label, mesh.instance_id, pose, -1, box});
      placed.push_back(&mesh);
      break;
    }
  }
  if (base.objects.empty()) fail(ErrorCode::kEmptyScene, "no object could be placed");

  Vec3 centroid;
  for (const SceneObject& o : base.objects) centroid = centroid + 0.5 * (o.aabb.min + o.aabb.max);
  centroid = (1.0 / static_cast<double>(base.objects.size())) * centroid;
  const Vec3 up = cfg.up.vector();
  const double dist = norm(centroid);
  Vec3 toward = -centroid;
  toward = toward - dot(toward, up) * up;
  if (norm(toward) < 1e-9) toward = cfg.up.axis == 2 ? Vec3{1, 0, 0} : Vec3{0, 0, -1};
  const Vec3 a = normalized(toward), b = cross(up, a);

  auto annotate = [&](const SceneCamera& cam, std::vector<SceneAnnotation>& out) {
    out.clear();
    for (std::size_t i = 0; i < placed.size(); ++i) {
      const auto bbox = project_bbox(*placed[i], base.objects[i].pose, cam.pose, cam.intrinsics);
      if (!bbox) continue;
      if (!size_feasible(*bbox, k.width, k.height, cfg.min_frac, cfg.max_frac)) return false;
      out.push_back({static_cast<int>(i), base.objects[i].class_label, *bbox});
    }
    return !out.empty();
  };

  std::vector<SceneDescription> views;
  for (int vi = 0; vi < cfg.views_per_scene; ++vi) {
    SceneDescription view = base;
    view.view = vi;
    bool ok = false;
    double ev = 0.0;
    for (int attempt = 0; attempt < cfg.max_attempts && !ok; ++attempt) {
      const double az = deg2rad(rng.uniform(cfg.azimuth_min, cfg.azimuth_max));
      const double el = deg2rad(rng.uniform(cfg.elevation_min, cfg.elevation_max));
      const double zoom = rng.uniform(cfg.zoom_min, cfg.zoom_max);
      ev = rng.uniform(cfg.ev_min, cfg.ev_max);
      const Vec3 dir = std::cos(el) * (std::cos(az) * a + std::sin(az) * b) + std::sin(el) * up;
      view.camera.pose = look_at(centroid + dist * dir, centroid, -up);
      view.camera.intrinsics = k.zoomed(zoom);
      view.camera.zoom = zoom;
      view.camera.exposure_ev = ev;
      ok = annotate(view.camera, view.annotations);
    }
    if (!ok) {
      // The base camera is feasible by construction.
      view.camera = SceneCamera{};
      view.camera.intrinsics = k;
      view.camera.exposure_ev = ev;
      annotate(view.camera, view.annotations);
    }
    views.push_back(std::move(view));
  }
  return views;
}

}  // namespace ocs
