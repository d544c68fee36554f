#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "ocsynth/error.hpp"
#include "ocsynth/util/rng.hpp"

namespace ocs {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int i) const { return i == 0 ? x : i == 1 ? y : z; }
  double& operator[](int i) { return i == 0 ? x : i == 1 ? y : z; }
  bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

// Unit quaternion, (x, y, z, w) order.
struct Quat {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;

  bool operator==(const Quat&) const = default;
};

inline Quat operator*(Quat a, Quat b) {
  return {a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y, a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w, a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z};
}
inline Quat conjugate(Quat q) { return {-q.x, -q.y, -q.z, q.w}; }
inline double norm(Quat q) { return std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w); }
inline Quat normalized(Quat q) {
  const double n = norm(q);
  return {q.x / n, q.y / n, q.z / n, q.w / n};
}

Quat axis_angle(Vec3 axis, double radians);
// Uniform over SO(3) (Shoemake's subgroup algorithm).
Quat random_rotation(Rng& rng);

// Row-major 3x3.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }
  Vec3 operator*(Vec3 v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
  }
};

Mat3 to_matrix(Quat q);
// Quaternion of a proper rotation matrix (columns orthonormal, det +1).
Quat from_matrix(const Mat3& r);

struct Aabb3 {
  Vec3 min;
  Vec3 max;

  bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
  bool operator==(const Aabb3&) const = default;
};

// Strictly positive overlap on every axis; touching faces do not collide.
bool aabb_collide(const Aabb3& a, const Aabb3& b);
// Strict interior test.
bool aabb_contains(const Aabb3& box, Vec3 p);

// Object-to-world transform: p_world = position + R(rotation) * (scale * p).
struct Pose3D {
  Vec3 position;
  Quat rotation;
  double scale = 1.0;

  Vec3 apply(Vec3 p) const { return position + to_matrix(rotation) * (scale * p); }
  bool operator==(const Pose3D&) const = default;
};

// Gravity-opposing direction as a signed camera/world axis, e.g. "-y".
struct UpAxis {
  int axis = 1;
  double sign = -1.0;

  Vec3 vector() const {
    Vec3 v;
    v[axis] = sign;
    return v;
  }
  double height(Vec3 p) const { return sign * p[axis]; }
  // The two horizontal axes in increasing index order.
  std::array<int, 2> horizontal() const {
    return axis == 0 ? std::array{1, 2} : axis == 1 ? std::array{0, 2} : std::array{0, 1};
  }
};

std::optional<UpAxis> parse_up_axis(const std::string& text);
std::string to_string(const UpAxis& up);

// Symmetric 3x3 eigen-decomposition by cyclic Jacobi. Eigenvalues ascending;
// vectors[i] pairs with values[i].
struct Eigen3 {
  std::array<double, 3> values{};
  std::array<Vec3, 3> vectors{};
};
Eigen3 symmetric_eigen(const Mat3& a);

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace ocs
