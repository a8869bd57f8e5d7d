#pragma once

#include "poseref/raster.hpp"

// Plain serial implementations kept alongside the parallel kernels. Tests
// compare the two routes and the kernel benchmark times them against each
// other. These are written as straightforward loops and must stay
// independent of the kernel code paths they check.
namespace poseref::reference {

// Per-triangle rasterization composited by per-pixel depth minimum.
DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const CameraIntrinsics& k);

// Brute-force nearest-contour-pixel scan, O(pixels * contour size).
DistanceField distance_transform(const std::vector<PixelCoord>& contour, int width, int height);

// Plain O(n^2) pair loop.
double mesh_diameter(const TriangleMesh& mesh);

}  // namespace poseref::reference
