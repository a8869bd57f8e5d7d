#include "poseref/reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poseref::reference {

namespace {

inline double orient2d(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

inline bool edge_is_top_left(double ax, double ay, double bx, double by) {
  return (ay == by && bx > ax) || (by < ay);
}

}  // namespace

DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const CameraIntrinsics& k) {
  validate(k);
  if (mesh.triangles.empty()) throw std::invalid_argument("render_depth: mesh has no triangles");

  std::vector<Vec3> cam(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    cam[i] = transform_point(pose, mesh.vertices[i]);
    if (!(cam[i].z > kNearPlane)) {
      throw DegenerateGeometryError("render_depth: vertex " + std::to_string(i) + " at z=" +
                                    std::to_string(cam[i].z) + " violates the near plane");
    }
  }

  DepthMap depth = DepthMap::background(k.width, k.height);
  for (const auto& tri : mesh.triangles) {
    double px[3], py[3], inv_z[3];
    for (int i = 0; i < 3; ++i) {
      const Vec3& c = cam[tri[i]];
      px[i] = k.fx * c.x / c.z + k.cx;
      py[i] = k.fy * c.y / c.z + k.cy;
      inv_z[i] = 1.0 / c.z;
    }
    double area2 = orient2d(px[0], py[0], px[1], py[1], px[2], py[2]);
    if (area2 == 0.0) continue;
    if (area2 < 0.0) {
      std::swap(px[1], px[2]);
      std::swap(py[1], py[2]);
      std::swap(inv_z[1], inv_z[2]);
      area2 = -area2;
    }
    bool top_left[3];
    for (int i = 0; i < 3; ++i) {
      const int a = (i + 1) % 3;
      const int b = (i + 2) % 3;
      top_left[i] = edge_is_top_left(px[a], py[a], px[b], py[b]);
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({px[0], px[1], px[2]}))));
    const int x1 = std::min(k.width - 1, static_cast<int>(std::floor(std::max({px[0], px[1], px[2]}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({py[0], py[1], py[2]}))));
    const int y1 = std::min(k.height - 1, static_cast<int>(std::floor(std::max({py[0], py[1], py[2]}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double w0 = orient2d(px[1], py[1], px[2], py[2], x, y);
        const double w1 = orient2d(px[2], py[2], px[0], py[0], x, y);
        const double w2 = orient2d(px[0], py[0], px[1], py[1], x, y);
        const bool in0 = w0 > 0.0 || (w0 == 0.0 && top_left[0]);
        const bool in1 = w1 > 0.0 || (w1 == 0.0 && top_left[1]);
        const bool in2 = w2 > 0.0 || (w2 == 0.0 && top_left[2]);
        if (!(in0 && in1 && in2)) continue;
        const double iz = (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]) / area2;
        const double z = 1.0 / iz;
        if (z < depth.at(x, y)) depth.at(x, y) = z;
      }
    }
  }
  return depth;
}

DistanceField distance_transform(const std::vector<PixelCoord>& contour, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("distance_transform: empty grid");
  if (contour.empty()) throw EmptyContourError("distance_transform: empty contour");
  DistanceField field{width, height, std::vector<double>(static_cast<size_t>(width) * height, 0.0)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (const PixelCoord& p : contour) {
        const double dx = x - p.u;
        const double dy = y - p.v;
        best = std::min(best, dx * dx + dy * dy);
      }
      field.at(x, y) = std::sqrt(best);
    }
  }
  return field;
}

double mesh_diameter(const TriangleMesh& mesh) {
  const auto& v = mesh.vertices;
  if (v.size() < 2) throw std::invalid_argument("mesh_diameter: need at least two vertices");
  double best = 0.0;
  for (size_t i = 0; i + 1 < v.size(); ++i) {
    for (size_t j = i + 1; j < v.size(); ++j) {
      best = std::max(best, squared_norm(v[j] - v[i]));
    }
  }
  return std::sqrt(best);
}

}  // namespace poseref::reference
