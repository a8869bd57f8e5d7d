#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "poseref/errors.hpp"

namespace poseref {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator-(const Vec3& v) { return {-v.x, -v.y, -v.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(const Vec3& v, double s) { return s * v; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) { a = a + b; return a; }
inline Vec3& operator-=(Vec3& a, const Vec3& b) { a = a - b; return a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double squared_norm(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (!(n > 0.0)) throw std::invalid_argument("normalized: zero-length vector");
  return (1.0 / n) * v;
}

// Unit rotation quaternion, Hamilton convention. Always unit-norm with the
// scalar part canonicalized to w >= 0; both are enforced on construction.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;  // identity

  // Normalizes a raw (w, x, y, z) 4-vector. Throws on (near-)zero input.
  static UnitQuaternion normalized(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 1e-300)) throw std::invalid_argument("UnitQuaternion: cannot normalize zero quaternion");
    double s = 1.0 / n;
    if (w < 0.0) s = -s;
    return UnitQuaternion(w * s, x * s, y * s, z * s, Raw{});
  }

  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad) {
    const Vec3 a = poseref::normalized(axis);  // throws on zero axis
    const double half = 0.5 * angle_rad;
    const double s = std::sin(half);
    return normalized(std::cos(half), s * a.x, s * a.y, s * a.z);
  }

  // Shortest rotation taking direction `from` onto direction `to`.
  static UnitQuaternion shortest_arc(const Vec3& from, const Vec3& to) {
    const Vec3 f = poseref::normalized(from);
    const Vec3 t = poseref::normalized(to);
    const double c = dot(f, t);
    if (c < -1.0 + 1e-12) {
      // Antipodal: rotate half a turn about any axis perpendicular to `from`.
      Vec3 helper = std::abs(f.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
      return from_axis_angle(cross(f, helper), kPi);
    }
    const Vec3 axis = cross(f, t);
    return normalized(1.0 + c, axis.x, axis.y, axis.z);
  }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  UnitQuaternion conjugate() const { return UnitQuaternion(w_, -x_, -y_, -z_, Raw{}); }

  Vec3 rotate(const Vec3& v) const {
    const Vec3 u{x_, y_, z_};
    const Vec3 uxv = cross(u, v);
    return v + 2.0 * (w_ * uxv + cross(u, uxv));
  }

 private:
  struct Raw {};
  UnitQuaternion(double w, double x, double y, double z, Raw) : w_(w), x_(x), y_(y), z_(z) {}

  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

// Hamilton product; rotate(a*b, v) == rotate(a, rotate(b, v)).
inline UnitQuaternion operator*(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion::normalized(
      a.w() * b.w() - a.x() * b.x() - a.y() * b.y() - a.z() * b.z(),
      a.w() * b.x() + a.x() * b.w() + a.y() * b.z() - a.z() * b.y(),
      a.w() * b.y() - a.x() * b.z() + a.y() * b.w() + a.z() * b.x(),
      a.w() * b.z() + a.x() * b.y() - a.y() * b.x() + a.z() * b.w());
}

// Rotation angle in [0, pi]. atan2 keeps this well conditioned near identity.
inline double rotation_angle(const UnitQuaternion& q) {
  const double v = std::sqrt(q.x() * q.x() + q.y() * q.y() + q.z() * q.z());
  return 2.0 * std::atan2(v, std::abs(q.w()));
}

// Relative rotation angle between two orientations, in [0, pi]. Insensitive
// to the q/-q double cover.
inline double angle_between(const UnitQuaternion& a, const UnitQuaternion& b) {
  return rotation_angle(a * b.conjugate());
}

// Rigid pose: camera_point = rotation * object_point + translation.
struct Pose {
  UnitQuaternion rotation;
  Vec3 translation;
};

inline Vec3 transform_point(const Pose& pose, const Vec3& p) {
  return pose.rotation.rotate(p) + pose.translation;
}

// Left-composed incremental update: the update rotation premultiplies the
// current rotation while translations add.
inline Pose apply_update(const Pose& pose, const Pose& update) {
  return {update.rotation * pose.rotation, pose.translation + update.translation};
}

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

inline void validate(const CameraIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
  if (k.width < 1 || k.height < 1) throw std::invalid_argument("intrinsics: image size must be positive");
}

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

inline ImagePoint project(const Vec3& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) {
    throw BehindCameraError("project: point at z=" + std::to_string(p.z) + " is behind the camera");
  }
  return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

inline Vec3 backproject(double u, double v, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0)) throw std::invalid_argument("backproject: depth must be positive");
  return {(u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth};
}

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

// Largest pairwise vertex distance. Exact brute force over all pairs.
double mesh_diameter(const TriangleMesh& mesh);

}  // namespace poseref
