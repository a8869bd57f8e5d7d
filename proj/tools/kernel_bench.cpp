// Times the parallel kernels against their serial reference implementations
// and checks that both routes produce identical output.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "poseref/assets.hpp"
#include "poseref/parallel.hpp"
#include "poseref/raster.hpp"
#include "poseref/reference.hpp"

namespace {

using poseref::CameraIntrinsics;
using poseref::DepthMap;
using poseref::DistanceField;
using poseref::PixelCoord;
using poseref::Pose;
using poseref::TriangleMesh;

double time_ms(int repeats, const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) body();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

void print_row(const char* kernel, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-20s %12.3f %12.3f %9.2fx %s\n", kernel, serial_ms, parallel_ms,
              serial_ms / parallel_ms, equal ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int repeats = 5;
  if (argc > 1) repeats = std::atoi(argv[1]);
  if (repeats < 1) {
    std::fprintf(stderr, "usage: kernel_bench [repeats]\n");
    return 1;
  }

  const TriangleMesh mesh = poseref::make_primitive("icosphere:0.1,5");
  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
  const Pose pose{poseref::UnitQuaternion::from_axis_angle({0.3, 1.0, 0.2}, 0.7), {0.02, -0.01, 0.45}};

  std::printf("mesh: icosphere level 5 (%zu vertices, %zu triangles), image %dx%d, threads %d\n\n",
              mesh.vertices.size(), mesh.triangles.size(), k.width, k.height, poseref::max_threads());
  std::printf("%-20s %12s %12s %10s %s\n", "kernel", "serial ms", "parallel ms", "speedup", "check");

  bool all_equal = true;

  DepthMap depth_parallel, depth_serial;
  const double render_parallel = time_ms(repeats, [&] { depth_parallel = poseref::render_depth(mesh, pose, k); });
  const double render_serial = time_ms(repeats, [&] { depth_serial = poseref::reference::render_depth(mesh, pose, k); });
  const bool render_equal = bitwise_equal(depth_parallel.values, depth_serial.values);
  all_equal = all_equal && render_equal;
  print_row("render_depth", render_serial, render_parallel, render_equal);

  const std::vector<PixelCoord> contour = poseref::extract_contour_pixels(poseref::extract_silhouette(depth_parallel));
  DistanceField field_parallel, field_serial;
  const double edt_parallel = time_ms(repeats, [&] { field_parallel = poseref::distance_transform(contour, k.width, k.height); });
  const double edt_serial = time_ms(repeats, [&] { field_serial = poseref::reference::distance_transform(contour, k.width, k.height); });
  const bool edt_equal = bitwise_equal(field_parallel.values, field_serial.values);
  all_equal = all_equal && edt_equal;
  print_row("distance_transform", edt_serial, edt_parallel, edt_equal);

  double diameter_parallel = 0.0, diameter_serial = 0.0;
  const double diam_parallel = time_ms(repeats, [&] { diameter_parallel = poseref::mesh_diameter(mesh); });
  const double diam_serial = time_ms(repeats, [&] { diameter_serial = poseref::reference::mesh_diameter(mesh); });
  const bool diam_equal = diameter_parallel == diameter_serial;
  all_equal = all_equal && diam_equal;
  print_row("mesh_diameter", diam_serial, diam_parallel, diam_equal);

  if (!all_equal) {
    std::fprintf(stderr, "\nparallel and serial outputs differ\n");
    return 2;
  }
  return 0;
}
