#include "poseref/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "poseref/parallel.hpp"
#include "poseref/rng.hpp"

namespace poseref {

namespace {

// Twice the signed area of (a, b, c); positive for the winding the coverage
// test below expects.
inline double orient2d(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// With positive orient2d winding in image coordinates (y down), a "top" edge
// runs in +x with the interior below it and a "left" edge runs in -y. Pixels
// exactly on top or left edges are covered; on right or bottom edges they are
// not, so adjacent triangles never claim a shared pixel twice.
inline bool edge_is_top_left(double ax, double ay, double bx, double by) {
  return (ay == by && bx > ax) || (by < ay);
}

struct TriangleSetup {
  double px[3];
  double py[3];
  double inv_z[3];
  double area2 = 0.0;
  bool top_left[3];  // edge i runs from vertex (i+1)%3 to vertex (i+2)%3
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

bool setup_triangle(const Vec3 cam[3], const CameraIntrinsics& k, TriangleSetup* setup) {
  for (int i = 0; i < 3; ++i) {
    setup->px[i] = k.fx * cam[i].x / cam[i].z + k.cx;
    setup->py[i] = k.fy * cam[i].y / cam[i].z + k.cy;
    setup->inv_z[i] = 1.0 / cam[i].z;
  }
  double area2 = orient2d(setup->px[0], setup->py[0], setup->px[1], setup->py[1], setup->px[2], setup->py[2]);
  if (area2 == 0.0) return false;
  if (area2 < 0.0) {
    std::swap(setup->px[1], setup->px[2]);
    std::swap(setup->py[1], setup->py[2]);
    std::swap(setup->inv_z[1], setup->inv_z[2]);
    area2 = -area2;
  }
  setup->area2 = area2;
  for (int i = 0; i < 3; ++i) {
    const int a = (i + 1) % 3;
    const int b = (i + 2) % 3;
    setup->top_left[i] = edge_is_top_left(setup->px[a], setup->py[a], setup->px[b], setup->py[b]);
  }
  const double min_x = std::min({setup->px[0], setup->px[1], setup->px[2]});
  const double max_x = std::max({setup->px[0], setup->px[1], setup->px[2]});
  const double min_y = std::min({setup->py[0], setup->py[1], setup->py[2]});
  const double max_y = std::max({setup->py[0], setup->py[1], setup->py[2]});
  setup->x0 = std::max(0, static_cast<int>(std::ceil(min_x)));
  setup->x1 = std::min(k.width - 1, static_cast<int>(std::floor(max_x)));
  setup->y0 = std::max(0, static_cast<int>(std::ceil(min_y)));
  setup->y1 = std::min(k.height - 1, static_cast<int>(std::floor(max_y)));
  return setup->x1 >= setup->x0 && setup->y1 >= setup->y0;
}

inline void rasterize_row(const TriangleSetup& t, int y, double* row) {
  const double fy = static_cast<double>(y);
  for (int x = t.x0; x <= t.x1; ++x) {
    const double fx = static_cast<double>(x);
    const double w0 = orient2d(t.px[1], t.py[1], t.px[2], t.py[2], fx, fy);
    const double w1 = orient2d(t.px[2], t.py[2], t.px[0], t.py[0], fx, fy);
    const double w2 = orient2d(t.px[0], t.py[0], t.px[1], t.py[1], fx, fy);
    const bool in0 = w0 > 0.0 || (w0 == 0.0 && t.top_left[0]);
    const bool in1 = w1 > 0.0 || (w1 == 0.0 && t.top_left[1]);
    const bool in2 = w2 > 0.0 || (w2 == 0.0 && t.top_left[2]);
    if (!(in0 && in1 && in2)) continue;
    const double inv_z = (w0 * t.inv_z[0] + w1 * t.inv_z[1] + w2 * t.inv_z[2]) / t.area2;
    const double z = 1.0 / inv_z;
    if (z < row[x]) row[x] = z;
  }
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

  std::vector<TriangleSetup> setups;
  setups.reserve(mesh.triangles.size());
  std::vector<std::vector<int>> rows(k.height);
  for (const auto& tri : mesh.triangles) {
    const Vec3 corners[3] = {cam[tri[0]], cam[tri[1]], cam[tri[2]]};
    TriangleSetup setup;
    if (!setup_triangle(corners, k, &setup)) continue;
    const int idx = static_cast<int>(setups.size());
    setups.push_back(setup);
    for (int y = setup.y0; y <= setup.y1; ++y) rows[y].push_back(idx);
  }

  DepthMap depth = DepthMap::background(k.width, k.height);
  // Each thread owns whole rows, so the result is identical for any thread
  // count and the per-pixel depth min needs no synchronization.
  POSEREF_PRAGMA_OMP(omp parallel for schedule(static))
  for (int y = 0; y < k.height; ++y) {
    double* row = depth.values.data() + static_cast<size_t>(y) * k.width;
    for (int idx : rows[y]) rasterize_row(setups[idx], y, row);
  }
  return depth;
}

SilhouetteMask extract_silhouette(const DepthMap& depth) {
  SilhouetteMask mask = SilhouetteMask::background(depth.width, depth.height);
  for (size_t i = 0; i < depth.values.size(); ++i) {
    mask.values[i] = std::isfinite(depth.values[i]) ? 1 : 0;
  }
  return mask;
}

std::vector<PixelCoord> extract_contour_pixels(const SilhouetteMask& mask) {
  std::vector<PixelCoord> contour;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      const bool border = u == 0 || v == 0 || u == mask.width - 1 || v == mask.height - 1;
      if (border || !mask.at(u - 1, v) || !mask.at(u + 1, v) || !mask.at(u, v - 1) || !mask.at(u, v + 1)) {
        contour.push_back({u, v});
      }
    }
  }
  return contour;
}

ContourPointSet sample_contour_points_3d(const DepthMap& depth, const CameraIntrinsics& k, int count) {
  if (count < 1) throw std::invalid_argument("sample_contour_points_3d: count must be positive");
  const std::vector<PixelCoord> contour = extract_contour_pixels(extract_silhouette(depth));
  if (contour.empty()) throw EmptyContourError("sample_contour_points_3d: silhouette has no contour");

  const size_t m = contour.size();
  const size_t n = std::min<size_t>(m, static_cast<size_t>(count));
  ContourPointSet set;
  set.points.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const PixelCoord px = contour[i * m / n];
    set.points.push_back(backproject(px.u, px.v, depth.at(px.u, px.v), k));
  }
  return set;
}

DistanceField distance_transform(const std::vector<PixelCoord>& contour, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("distance_transform: empty grid");
  if (contour.empty()) throw EmptyContourError("distance_transform: empty contour");

  std::vector<uint8_t> occupied(static_cast<size_t>(width) * height, 0);
  for (const PixelCoord& p : contour) {
    if (p.u < 0 || p.u >= width || p.v < 0 || p.v >= height) {
      throw std::invalid_argument("distance_transform: contour pixel outside grid");
    }
    occupied[static_cast<size_t>(p.v) * width + p.u] = 1;
  }

  // Beyond any possible in-grid distance; keeps empty-column parabolas from
  // ever winning against a real one.
  const double far = width + height + 1;

  // Vertical pass: per-column distance (in rows) to the nearest occupied
  // pixel, via a down sweep and an up sweep.
  std::vector<double> vertical(static_cast<size_t>(width) * height);
  POSEREF_PRAGMA_OMP(omp parallel for schedule(static))
  for (int x = 0; x < width; ++x) {
    double d = far;
    for (int y = 0; y < height; ++y) {
      d = occupied[static_cast<size_t>(y) * width + x] ? 0.0 : std::min(d + 1.0, far);
      vertical[static_cast<size_t>(y) * width + x] = d;
    }
    d = far;
    for (int y = height - 1; y >= 0; --y) {
      d = occupied[static_cast<size_t>(y) * width + x] ? 0.0 : std::min(d + 1.0, far);
      double& cell = vertical[static_cast<size_t>(y) * width + x];
      cell = std::min(cell, d);
    }
  }

  // Horizontal pass: per row, the lower envelope of the parabolas
  // i -> vertical(i, y)^2 + (x - i)^2 gives the exact squared distance.
  DistanceField field{width, height, std::vector<double>(static_cast<size_t>(width) * height, 0.0)};
  POSEREF_PRAGMA_OMP(omp parallel for schedule(static))
  for (int y = 0; y < height; ++y) {
    const double* f = vertical.data() + static_cast<size_t>(y) * width;
    std::vector<int> apex(width);
    std::vector<double> boundary(width + 1);
    int k = 0;
    apex[0] = 0;
    boundary[0] = -std::numeric_limits<double>::infinity();
    boundary[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < width; ++q) {
      const double fq = f[q] * f[q] + static_cast<double>(q) * q;
      double s;
      while (true) {
        const int p = apex[k];
        s = (fq - (f[p] * f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
        if (s > boundary[k]) break;
        --k;
      }
      ++k;
      apex[k] = q;
      boundary[k] = s;
      boundary[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    double* out = field.values.data() + static_cast<size_t>(y) * width;
    for (int q = 0; q < width; ++q) {
      while (boundary[k + 1] < q) ++k;
      const double dx = q - apex[k];
      out[q] = std::sqrt(dx * dx + f[apex[k]] * f[apex[k]]);
    }
  }
  return field;
}

DistanceSample sample_distance(const DistanceField& field, double u, double v) {
  if (field.width < 1 || field.height < 1) throw std::invalid_argument("sample_distance: empty field");
  const double max_u = field.width - 1;
  const double max_v = field.height - 1;
  const double uc = std::clamp(u, 0.0, max_u);
  const double vc = std::clamp(v, 0.0, max_v);

  int x0 = std::min(static_cast<int>(std::floor(uc)), field.width - 2);
  int y0 = std::min(static_cast<int>(std::floor(vc)), field.height - 2);
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  const int x1 = std::min(x0 + 1, field.width - 1);
  const int y1 = std::min(y0 + 1, field.height - 1);
  const double fx = uc - x0;
  const double fy = vc - y0;

  const double d00 = field.at(x0, y0);
  const double d10 = field.at(x1, y0);
  const double d01 = field.at(x0, y1);
  const double d11 = field.at(x1, y1);

  DistanceSample s;
  s.value = (1.0 - fy) * ((1.0 - fx) * d00 + fx * d10) + fy * ((1.0 - fx) * d01 + fx * d11);
  s.du = (1.0 - fy) * (d10 - d00) + fy * (d11 - d01);
  s.dv = (1.0 - fx) * (d01 - d00) + fx * (d11 - d10);

  const double dx = u - uc;
  const double dy = v - vc;
  if (dx != 0.0 || dy != 0.0) {
    const double dist = std::hypot(dx, dy);
    s.value += dist;
    if (dx != 0.0 && dy != 0.0) {
      // Past a corner the clamp point is fixed, only the radial term moves.
      s.du = dx / dist;
      s.dv = dy / dist;
    } else if (dx != 0.0) {
      s.du = dx > 0.0 ? 1.0 : -1.0;
    } else {
      s.dv = dy > 0.0 ? 1.0 : -1.0;
    }
  }
  return s;
}

int compute_window_size(const TriangleMesh& mesh, const CameraIntrinsics& k, double min_distance,
                        int n_views, double padding_fraction, uint64_t seed) {
  validate(k);
  if (n_views < 1) throw std::invalid_argument("compute_window_size: need at least one view");
  if (padding_fraction < 0.0) throw std::invalid_argument("compute_window_size: negative padding");
  double radius = 0.0;
  for (const Vec3& vtx : mesh.vertices) radius = std::max(radius, norm(vtx));
  if (!(min_distance > radius)) {
    throw std::invalid_argument("compute_window_size: min_distance must exceed the mesh radius");
  }

  // Fibonacci-spiral directions, decorrelated from the lattice by a seeded
  // random rotation applied to the whole set.
  Rng rng(mix_seed(seed, 0x77696e646f77ull));
  const UnitQuaternion offset = random_rotation(rng);
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));

  int max_extent = 0;
  for (int i = 0; i < n_views; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n_views;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    const Vec3 dir = offset.rotate({r * std::cos(phi), r * std::sin(phi), z});
    const Pose pose{UnitQuaternion::shortest_arc({0.0, 0.0, 1.0}, dir), {0.0, 0.0, min_distance}};

    const SilhouetteMask mask = extract_silhouette(render_depth(mesh, pose, k));
    int u_min = mask.width, u_max = -1, v_min = mask.height, v_max = -1;
    for (int v = 0; v < mask.height; ++v) {
      for (int u = 0; u < mask.width; ++u) {
        if (!mask.at(u, v)) continue;
        u_min = std::min(u_min, u);
        u_max = std::max(u_max, u);
        v_min = std::min(v_min, v);
        v_max = std::max(v_max, v);
      }
    }
    if (u_max < u_min) {
      throw DegenerateViewError("compute_window_size: probe view " + std::to_string(i) +
                                " sees nothing of the object");
    }
    max_extent = std::max({max_extent, u_max - u_min + 1, v_max - v_min + 1});
  }
  return static_cast<int>(std::ceil(max_extent * (1.0 + padding_fraction)));
}

}  // namespace poseref
