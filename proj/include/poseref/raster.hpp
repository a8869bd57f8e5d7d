#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "poseref/geometry.hpp"

namespace poseref {

// Vertices closer than this along z may not be rendered; there is no
// near-plane clipping, violating geometry is rejected instead.
inline constexpr double kNearPlane = 1e-4;

struct PixelCoord {
  int u = 0;
  int v = 0;
  friend bool operator==(const PixelCoord& a, const PixelCoord& b) { return a.u == b.u && a.v == b.v; }
};

// Per-pixel camera-space depth in meters. Background pixels hold +infinity.
struct DepthMap {
  using value_type = double;
  static constexpr double kBackground = std::numeric_limits<double>::infinity();

  int width = 0;
  int height = 0;
  std::vector<double> values;

  static DepthMap background(int w, int h) { return {w, h, std::vector<double>(static_cast<size_t>(w) * h, kBackground)}; }

  double& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
  bool is_foreground(int u, int v) const { return std::isfinite(at(u, v)); }
};

struct SilhouetteMask {
  using value_type = uint8_t;

  int width = 0;
  int height = 0;
  std::vector<uint8_t> values;  // 1 foreground, 0 background

  static SilhouetteMask background(int w, int h) { return {w, h, std::vector<uint8_t>(static_cast<size_t>(w) * h, 0)}; }

  uint8_t& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
  uint8_t at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
};

// Exact Euclidean distance (in pixels) to the nearest contour pixel,
// sampled on the pixel-center lattice.
struct DistanceField {
  using value_type = double;

  int width = 0;
  int height = 0;
  std::vector<double> values;

  double& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
};

// 3D contour points in camera space plus the pose they were extracted under.
struct ContourPointSet {
  std::vector<Vec3> points;
  Pose source_pose;
};

// Software z-buffer rasterization of the mesh under `pose`. Pixel (u, v) is
// sampled at continuous image coordinate (u, v); boundary coverage follows
// the top-left fill rule so shared edges are covered exactly once. Depth is
// perspective-correct (1/z interpolated). Throws DegenerateGeometryError if
// any transformed vertex lies closer than kNearPlane.
DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const CameraIntrinsics& k);

SilhouetteMask extract_silhouette(const DepthMap& depth);

// Foreground pixels with at least one 4-neighbor background pixel; image
// border pixels that are foreground also count. Row-major order.
std::vector<PixelCoord> extract_contour_pixels(const SilhouetteMask& mask);

// Extracts the contour of `depth`'s silhouette and back-projects `count`
// pixels of it, chosen by uniform stride over the row-major contour list.
// Throws EmptyContourError when the silhouette is empty.
ContourPointSet sample_contour_points_3d(const DepthMap& depth, const CameraIntrinsics& k, int count);

// Exact Euclidean distance transform of the contour pixel set.
DistanceField distance_transform(const std::vector<PixelCoord>& contour, int width, int height);

struct DistanceSample {
  double value = 0.0;
  double du = 0.0;
  double dv = 0.0;
};

// Bilinear interpolation over the four surrounding pixel centers with the
// exact analytic gradient of the interpolant. Outside the lattice hull the
// value continues with slope 1 along the shortest direction back to the
// boundary (added to the boundary value) and the gradient points away from
// the field, so the optimizer stays informed when points leave the crop.
DistanceSample sample_distance(const DistanceField& field, double u, double v);

// Square window side length that covers the object's silhouette from
// `n_views` probe directions (seeded low-discrepancy sphere sampling) at
// translation (0, 0, min_distance), grown by `padding_fraction` and rounded
// up. Throws DegenerateViewError if a probe view sees nothing.
int compute_window_size(const TriangleMesh& mesh, const CameraIntrinsics& k, double min_distance,
                        int n_views, double padding_fraction, uint64_t seed = 0);

template <typename ImageT>
struct CropPatch {
  ImageT image;
  // Full-image pixel coordinate of patch pixel (0, 0):
  // image_u = patch_u + origin_u, image_v = patch_v + origin_v.
  int origin_u = 0;
  int origin_v = 0;
};

// Cuts a `window` x `window` patch centered on (center_u, center_v), filling
// out-of-bounds pixels with `fill`.
template <typename ImageT>
CropPatch<ImageT> crop_patch(const ImageT& src, int center_u, int center_v, int window,
                             typename ImageT::value_type fill) {
  if (window < 1) throw std::invalid_argument("crop_patch: window must be positive");
  CropPatch<ImageT> out;
  out.origin_u = center_u - window / 2;
  out.origin_v = center_v - window / 2;
  out.image.width = window;
  out.image.height = window;
  out.image.values.assign(static_cast<size_t>(window) * window, fill);
  for (int v = 0; v < window; ++v) {
    const int sv = v + out.origin_v;
    if (sv < 0 || sv >= src.height) continue;
    for (int u = 0; u < window; ++u) {
      const int su = u + out.origin_u;
      if (su < 0 || su >= src.width) continue;
      out.image.at(u, v) = src.at(su, sv);
    }
  }
  return out;
}

// Intrinsics of a cropped patch: the principal point shifts by the crop
// origin, focal lengths are unchanged.
inline CameraIntrinsics window_intrinsics(const CameraIntrinsics& k, int origin_u, int origin_v, int window) {
  return {k.fx, k.fy, k.cx - origin_u, k.cy - origin_v, window, window};
}

}  // namespace poseref
