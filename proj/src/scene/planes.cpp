#include "ocsynth/scene/planes.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "ocsynth/dataset/manifest.hpp"

namespace ocs {

using nlohmann::json;

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "intrinsics frame size must be positive");
  if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height))
    fail(ErrorCode::kInvalidArgument, "principal point outside frame");
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
  CameraIntrinsics k;
  try {
    const json j = json::parse(read_text_file(path));
    k = {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
         j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocolError, path.string() + ": " + e.what());
  }
  k.validate();
  return k;
}

void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
  const json j{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  write_text_file(path, j.dump(2) + "\n");
}

PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& k) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height)
    fail(ErrorCode::kDimensionMismatch, "depth image does not match intrinsics");
  PointCloud cloud;
  cloud.width = depth.width;
  cloud.height = depth.height;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::uint16_t mm = depth.at(u, v);
      if (mm == 0) continue;
      const double z = mm / 1000.0;
      cloud.points.push_back({(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z});
      cloud.pixel.push_back(v * depth.width + u);
    }
  }
  if (cloud.points.empty()) fail(ErrorCode::kAllMissing, "depth image has no valid samples");
  return cloud;
}

namespace {

// Running first and second moments of a point set.
struct Moments {
  double n = 0;
  Vec3 sum;
  std::array<double, 6> sq{};  // xx xy xz yy yz zz

  void add(Vec3 p) {
    n += 1;
    sum = sum + p;
    sq[0] += p.x * p.x, sq[1] += p.x * p.y, sq[2] += p.x * p.z;
    sq[3] += p.y * p.y, sq[4] += p.y * p.z, sq[5] += p.z * p.z;
  }
  Moments merged(const Moments& o) const {
    Moments m = *this;
    m.n += o.n;
    m.sum = m.sum + o.sum;
    for (int i = 0; i < 6; ++i) m.sq[i] += o.sq[i];
    return m;
  }
  Vec3 mean() const { return (1.0 / n) * sum; }
  Eigen3 eigen() const {
    const Vec3 c = mean();
    Mat3 cov;
    cov.m = {sq[0] / n - c.x * c.x, sq[1] / n - c.x * c.y, sq[2] / n - c.x * c.z,
             sq[1] / n - c.x * c.y, sq[3] / n - c.y * c.y, sq[4] / n - c.y * c.z,
             sq[2] / n - c.x * c.z, sq[4] / n - c.y * c.z, sq[5] / n - c.z * c.z};
    return symmetric_eigen(cov);
  }
  double mse() const { return std::max(0.0, eigen().values[0]); }
};

struct Node {
  Moments moments;
  std::vector<int> blocks;
  std::set<int> neighbors;
  bool alive = true;
};

Vec3 any_perpendicular(Vec3 n) {
  const Vec3 helper = std::fabs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return normalized(cross(n, helper));
}

PlaneModel make_plane(const PointCloud& cloud, std::vector<int> inliers) {
  std::sort(inliers.begin(), inliers.end());
  const PlaneFit fit = fit_plane(cloud.points, inliers);
  PlaneModel p;
  p.normal = dot(fit.normal, fit.centroid) < 0.0 ? -fit.normal : fit.normal;
  p.centroid = fit.centroid;
  p.d = -dot(p.normal, fit.centroid);
  p.mse = fit.mse;
  p.axis_u = any_perpendicular(p.normal);
  p.axis_v = cross(p.normal, p.axis_u);
  std::vector<std::array<double, 2>> uv;
  uv.reserve(inliers.size());
  for (int i : inliers) {
    const Vec3 r = cloud.points[i] - p.centroid;
    uv.push_back({dot(r, p.axis_u), dot(r, p.axis_v)});
  }
  p.hull = convex_hull(std::move(uv));
  p.inliers = std::move(inliers);
  return p;
}

}  // namespace

void PlaneParams::validate() const {
  if (block_size < 2) fail(ErrorCode::kInvalidArgument, "block_size must be >= 2");
  if (!(merge_mse_max > 0.0)) fail(ErrorCode::kInvalidArgument, "merge_mse_max must be positive");
  if (min_inliers < 3) fail(ErrorCode::kInvalidArgument, "min_inliers must be >= 3");
  if (!(min_block_fill > 0.0 && min_block_fill <= 1.0))
    fail(ErrorCode::kInvalidArgument, "min_block_fill must lie in (0,1]");
}

PlaneFit fit_plane(const std::vector<Vec3>& points, const std::vector<int>& indices) {
  if (indices.size() < 3) fail(ErrorCode::kEmptyInput, "plane fit needs at least 3 points");
  Vec3 c;
  for (int i : indices) c = c + points[i];
  c = (1.0 / static_cast<double>(indices.size())) * c;
  Mat3 cov;
  cov.m.fill(0.0);
  for (int i : indices) {
    const Vec3 r = points[i] - c;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) cov(a, b) += r[a] * r[b];
  }
  for (double& x : cov.m) x /= static_cast<double>(indices.size());
  const Eigen3 e = symmetric_eigen(cov);
  return {c, e.vectors[0], std::max(0.0, e.values[0])};
}

std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto turn = [](const auto& o, const auto& a, const auto& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && turn(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && turn(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

bool point_in_convex(const std::vector<std::array<double, 2>>& hull, std::array<double, 2> p) {
  if (hull.size() < 3) return false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    if ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < 0) return false;
  }
  return true;
}

std::vector<PlaneModel> detect_planes_ahc(const PointCloud& cloud, const PlaneParams& params) {
  params.validate();
  if (!cloud.organized()) fail(ErrorCode::kUnorganized, "plane detection needs per-point pixel origins");
  const int bs = params.block_size;
  const int bw = (cloud.width + bs - 1) / bs, bh = (cloud.height + bs - 1) / bs;

  std::vector<std::vector<int>> block_points(static_cast<std::size_t>(bw) * bh);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const int px = cloud.pixel[i] % cloud.width, py = cloud.pixel[i] / cloud.width;
    block_points[(py / bs) * bw + px / bs].push_back(static_cast<int>(i));
  }

  // One graph node per valid block.
  std::vector<Node> nodes;
  std::vector<int> block_node(block_points.size(), -1);
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const int b = by * bw + bx;
      const int area = (std::min(cloud.width, (bx + 1) * bs) - bx * bs) * (std::min(cloud.height, (by + 1) * bs) - by * bs);
      const auto& pts = block_points[b];
      if (pts.size() < 3 || static_cast<double>(pts.size()) < params.min_block_fill * area) continue;
      Node node;
      for (int i : pts) node.moments.add(cloud.points[i]);
      if (node.moments.mse() > params.merge_mse_max) continue;
      node.blocks.push_back(b);
      block_node[b] = static_cast<int>(nodes.size());
      nodes.push_back(std::move(node));
    }
  }
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      const int a = block_node[by * bw + bx];
      if (a < 0) continue;
      if (bx + 1 < bw && block_node[by * bw + bx + 1] >= 0) {
        nodes[a].neighbors.insert(block_node[by * bw + bx + 1]);
        nodes[block_node[by * bw + bx + 1]].neighbors.insert(a);
      }
      if (by + 1 < bh && block_node[(by + 1) * bw + bx] >= 0) {
        nodes[a].neighbors.insert(block_node[(by + 1) * bw + bx]);
        nodes[block_node[(by + 1) * bw + bx]].neighbors.insert(a);
      }
    }
  }

  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t i = 0; i < nodes.size(); ++i) heap.push({nodes[i].moments.mse(), static_cast<int>(i)});

  std::vector<int> extracted;
  while (!heap.empty()) {
    const int u = heap.top().second;
    heap.pop();
    if (!nodes[u].alive) continue;
    int best = -1;
    double best_mse = 0.0;
    Moments best_moments;
    for (int v : nodes[u].neighbors) {
      const Moments m = nodes[u].moments.merged(nodes[v].moments);
      const double e = m.mse();
      if (best < 0 || e < best_mse) best = v, best_mse = e, best_moments = m;
    }
    if (best >= 0 && best_mse <= params.merge_mse_max) {
      Node w;
      w.moments = best_moments;
      w.blocks = nodes[u].blocks;
      w.blocks.insert(w.blocks.end(), nodes[best].blocks.begin(), nodes[best].blocks.end());
      const int wid = static_cast<int>(nodes.size());
      for (int side : {u, best}) {
        nodes[side].alive = false;
        for (int n : nodes[side].neighbors) {
          if (n == u || n == best) continue;
          nodes[n].neighbors.erase(side);
          nodes[n].neighbors.insert(wid);
          w.neighbors.insert(n);
        }
      }
      nodes.push_back(std::move(w));
      heap.push({best_mse, wid});
      continue;
    }
    nodes[u].alive = false;
    for (int n : nodes[u].neighbors) nodes[n].neighbors.erase(u);
    extracted.push_back(u);
  }

  // Coplanar patches that are not adjacent in the image (e.g. a floor split
  // by an occluder) merge while the joint fit stays within the threshold.
  std::vector<Node> found;
  for (int u : extracted) found.push_back(std::move(nodes[u]));
  for (;;) {
    std::size_t bi = 0, bj = 0;
    double best = params.merge_mse_max;
    bool any = false;
    for (std::size_t i = 0; i < found.size(); ++i)
      for (std::size_t j = i + 1; j < found.size(); ++j) {
        const double e = found[i].moments.merged(found[j].moments).mse();
        if (e <= best) best = e, bi = i, bj = j, any = true;
      }
    if (!any) break;
    found[bi].moments = found[bi].moments.merged(found[bj].moments);
    found[bi].blocks.insert(found[bi].blocks.end(), found[bj].blocks.begin(), found[bj].blocks.end());
    found.erase(found.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  // Block points far from their plane are released. Unclaimed points then join
  // the nearest plane present in their own or an adjacent block when close to
  // it, repeated until nothing changes.
  std::vector<int> owner(cloud.points.size(), -1);
  std::vector<PlaneFit> fits(found.size());
  std::vector<double> tols(found.size());
  std::vector<std::vector<int>> block_planes(block_points.size());
  for (std::size_t p = 0; p < found.size(); ++p) {
    const Eigen3 e = found[p].moments.eigen();
    fits[p] = {found[p].moments.mean(), e.vectors[0], std::max(0.0, e.values[0])};
    tols[p] = std::max(3.0 * std::sqrt(fits[p].mse), std::sqrt(params.merge_mse_max));
    for (int b : found[p].blocks) {
      block_planes[b].push_back(static_cast<int>(p));
      for (int i : block_points[b])
        if (std::fabs(dot(fits[p].normal, cloud.points[i] - fits[p].centroid)) <= tols[p]) owner[i] = static_cast<int>(p);
    }
  }
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::vector<int>> next = block_planes;
    for (int by = 0; by < bh; ++by) {
      for (int bx = 0; bx < bw; ++bx) {
        const int b = by * bw + bx;
        std::vector<int> candidates;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = bx + dx, ny = by + dy;
            if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
            for (int p : block_planes[ny * bw + nx])
              if (std::find(candidates.begin(), candidates.end(), p) == candidates.end()) candidates.push_back(p);
          }
        if (candidates.empty()) continue;
        for (int i : block_points[b]) {
          if (owner[i] >= 0) continue;
          int best = -1;
          double best_dist = 0.0;
          for (int p : candidates) {
            const double dist = std::fabs(dot(fits[p].normal, cloud.points[i] - fits[p].centroid));
            if (dist <= tols[p] && (best < 0 || dist < best_dist)) best = p, best_dist = dist;
          }
          if (best < 0) continue;
          owner[i] = best;
          changed = true;
          if (std::find(next[b].begin(), next[b].end(), best) == next[b].end()) next[b].push_back(best);
        }
      }
    }
    block_planes = std::move(next);
  }
  std::vector<std::vector<int>> inliers(found.size());
  for (std::size_t i = 0; i < owner.size(); ++i)
    if (owner[i] >= 0) inliers[owner[i]].push_back(static_cast<int>(i));

  std::vector<PlaneModel> planes;
  for (auto& in : inliers)
    if (static_cast<int>(in.size()) >= params.min_inliers) planes.push_back(make_plane(cloud, std::move(in)));
  std::stable_sort(planes.begin(), planes.end(),
                   [](const PlaneModel& a, const PlaneModel& b) { return a.inliers.size() > b.inliers.size(); });
  return planes;
}

SupportPlanes select_support_planes(const std::vector<PlaneModel>& planes, const UpAxis& up, double angle_thresh_deg) {
  if (planes.empty()) fail(ErrorCode::kNoHorizontalPlane, "no planes detected");
  const double cos_thresh = std::cos(deg2rad(angle_thresh_deg));
  SupportPlanes out;
  for (const PlaneModel& p : planes)
    if (std::fabs(dot(p.normal, up.vector())) >= cos_thresh) out.horizontal.push_back(p);
  if (out.horizontal.empty()) fail(ErrorCode::kNoHorizontalPlane, "no plane within the gravity angle threshold");
  // Height of the plane's foot point from the origin.
  auto height = [&](const PlaneModel& p) { return up.height(-p.d * p.normal); };
  for (std::size_t i = 1; i < out.horizontal.size(); ++i)
    if (height(out.horizontal[i]) < height(out.horizontal[out.floor])) out.floor = static_cast<int>(i);
  return out;
}

}  // namespace ocs
