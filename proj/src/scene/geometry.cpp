#include "ocsynth/scene/geometry.hpp"

#include <algorithm>

namespace ocs {

Quat axis_angle(Vec3 axis, double radians) {
  const Vec3 a = normalized(axis);
  const double s = std::sin(radians / 2.0);
  return {a.x * s, a.y * s, a.z * s, std::cos(radians / 2.0)};
}

Quat random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * kPi * u2, t3 = 2.0 * kPi * u3;
  return normalized(Quat{a * std::sin(t2), a * std::cos(t2), b * std::sin(t3), b * std::cos(t3)});
}

Mat3 to_matrix(Quat q) {
  const double x = q.x, y = q.y, z = q.z, w = q.w;
  Mat3 r;
  r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
         2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
         2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
  return r;
}

Quat from_matrix(const Mat3& r) {
  const double tr = r(0, 0) + r(1, 1) + r(2, 2);
  Quat q;
  if (tr > 0) {
    const double s = 2.0 * std::sqrt(tr + 1.0);
    q = {(r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s, 0.25 * s};
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s, (r(2, 1) - r(1, 2)) / s};
  } else if (r(1, 1) > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s, (r(0, 2) - r(2, 0)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s, (r(1, 0) - r(0, 1)) / s};
  }
  return normalized(q);
}

bool aabb_collide(const Aabb3& a, const Aabb3& b) {
  for (int i = 0; i < 3; ++i)
    if (std::min(a.max[i], b.max[i]) - std::max(a.min[i], b.min[i]) <= 0.0) return false;
  return true;
}

bool aabb_contains(const Aabb3& box, Vec3 p) {
  for (int i = 0; i < 3; ++i)
    if (!(p[i] > box.min[i] && p[i] < box.max[i])) return false;
  return true;
}

std::optional<UpAxis> parse_up_axis(const std::string& text) {
  if (text.size() != 2 || (text[0] != '+' && text[0] != '-')) return std::nullopt;
  const int axis = text[1] == 'x' ? 0 : text[1] == 'y' ? 1 : text[1] == 'z' ? 2 : -1;
  if (axis < 0) return std::nullopt;
  return UpAxis{axis, text[0] == '+' ? 1.0 : -1.0};
}

std::string to_string(const UpAxis& up) {
  return std::string(up.sign > 0 ? "+" : "-") + "xyz"[up.axis];
}

Eigen3 symmetric_eigen(const Mat3& input) {
  Mat3 a = input;
  Mat3 v;  // accumulated rotations, columns are eigenvectors
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double diag = a(0, 0) * a(0, 0) + a(1, 1) * a(1, 1) + a(2, 2) * a(2, 2);
    if (off <= 1e-34 * diag || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  Eigen3 out;
  for (int k = 0; k < 3; ++k) {
    const int i = order[k];
    out.values[k] = a(i, i);
    out.vectors[k] = normalized(Vec3{v(0, i), v(1, i), v(2, i)});
  }
  return out;
}

}  // namespace ocs
