#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>
#include <vector>

#include "poseref/assets.hpp"
#include "poseref/errors.hpp"
#include "poseref/raster.hpp"
#include "poseref/reference.hpp"
#include "poseref/rng.hpp"
#include "support.hpp"

using namespace poseref;

namespace {

const CameraIntrinsics kView{500.0, 500.0, 320.0, 240.0, 640, 480};

TriangleMesh single_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
  TriangleMesh m;
  m.vertices = {a, b, c};
  m.triangles = {{0, 1, 2}};
  return m;
}

TriangleMesh random_mesh(Rng& rng, int triangle_count) {
  TriangleMesh m;
  for (int t = 0; t < triangle_count; ++t) {
    const int base = static_cast<int>(m.vertices.size());
    const Vec3 center = {rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1), rng.uniform(-0.05, 0.05)};
    for (int j = 0; j < 3; ++j) m.vertices.push_back(center + testsupport::random_vector(rng, 0.08));
    m.triangles.push_back({base, base + 1, base + 2});
  }
  return m;
}

std::vector<PixelCoord> random_contour(Rng& rng, int count, int width, int height) {
  std::set<std::pair<int, int>> seen;
  while (static_cast<int>(seen.size()) < count) {
    seen.insert({static_cast<int>(rng.uniform(0.0, width)) % width,
                 static_cast<int>(rng.uniform(0.0, height)) % height});
  }
  std::vector<PixelCoord> out;
  for (const auto& [u, v] : seen) out.push_back({u, v});
  return out;
}

}  // namespace

TEST_CASE("constant-depth triangle covers pixels at its depth") {
  const CameraIntrinsics k{1.0, 1.0, 2.0, 2.0, 5, 5};
  const TriangleMesh tri = single_triangle({-20.0, -20.0, 1.0}, {40.0, -20.0, 1.0}, {-20.0, 40.0, 1.0});
  const DepthMap depth = render_depth(tri, Pose{}, k);
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 5; ++u) {
      REQUIRE(depth.is_foreground(u, v));
      CHECK(depth.at(u, v) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("z-buffer keeps the nearer of two overlapping triangles") {
  const CameraIntrinsics k{1.0, 1.0, 2.0, 2.0, 5, 5};
  TriangleMesh two = single_triangle({-20.0, -20.0, 1.0}, {40.0, -20.0, 1.0}, {-20.0, 40.0, 1.0});
  const TriangleMesh near = single_triangle({-10.0, -10.0, 0.5}, {20.0, -10.0, 0.5}, {-10.0, 20.0, 0.5});
  two.vertices.insert(two.vertices.end(), near.vertices.begin(), near.vertices.end());
  two.triangles.push_back({3, 4, 5});
  const DepthMap depth = render_depth(two, Pose{}, k);
  for (int v = 0; v < 5; ++v) {
    for (int u = 0; u < 5; ++u) CHECK(depth.at(u, v) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("rendering rejects geometry that crosses the near plane") {
  const TriangleMesh tri = single_triangle({-1.0, -1.0, 1.0}, {1.0, -1.0, 1.0}, {0.0, 1.0, -0.5});
  CHECK_THROWS_AS(render_depth(tri, Pose{}, kView), DegenerateGeometryError);
}

TEST_CASE("sphere silhouette area matches the closed form") {
  const TriangleMesh sphere = make_icosphere(0.1, 4);
  const Pose pose{UnitQuaternion(), {0.0, 0.0, 0.5}};
  const DepthMap depth = render_depth(sphere, pose, kView);
  const SilhouetteMask mask = extract_silhouette(depth);

  int area = 0;
  for (uint8_t m : mask.values) area += m;

  const double apparent = 500.0 * 0.1 / std::sqrt(0.5 * 0.5 - 0.1 * 0.1);
  const double expected = kPi * apparent * apparent;
  CHECK(std::abs(area - expected) < 0.02 * expected);

  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) CHECK(mask.at(u, v) == (depth.is_foreground(u, v) ? 1 : 0));
  }
}

TEST_CASE("parallel renderer matches the serial reference bitwise") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const TriangleMesh mesh = random_mesh(rng, 10);
    const Pose pose{testsupport::random_quaternion(rng), {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0.6, 1.2)}};
    const DepthMap a = render_depth(mesh, pose, kView);
    const DepthMap b = reference::render_depth(mesh, pose, kView);
    REQUIRE(a.values.size() == b.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("contour extraction") {
  SUBCASE("empty mask has no contour") {
    CHECK(extract_contour_pixels(SilhouetteMask::background(8, 8)).empty());
  }

  SUBCASE("full mask yields exactly the border") {
    SilhouetteMask full = SilhouetteMask::background(7, 5);
    std::fill(full.values.begin(), full.values.end(), uint8_t{1});
    const auto contour = extract_contour_pixels(full);
    CHECK(static_cast<int>(contour.size()) == 2 * 7 + 2 * 5 - 4);
    for (const PixelCoord& p : contour) {
      CHECK((p.u == 0 || p.u == 6 || p.v == 0 || p.v == 4));
    }
  }

  SUBCASE("centered 3x3 block in a 5x5 mask") {
    SilhouetteMask mask = SilhouetteMask::background(5, 5);
    for (int v = 1; v <= 3; ++v) {
      for (int u = 1; u <= 3; ++u) mask.at(u, v) = 1;
    }
    const auto contour = extract_contour_pixels(mask);
    const std::vector<PixelCoord> expected = {{1, 1}, {2, 1}, {3, 1}, {1, 2},
                                              {3, 2}, {1, 3}, {2, 3}, {3, 3}};
    REQUIRE(contour.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) CHECK(contour[i] == expected[i]);

    // A one-pixel-thick contour is its own contour.
    SilhouetteMask ring = SilhouetteMask::background(5, 5);
    for (const PixelCoord& p : contour) ring.at(p.u, p.v) = 1;
    const auto again = extract_contour_pixels(ring);
    REQUIRE(again.size() == contour.size());
    for (size_t i = 0; i < contour.size(); ++i) CHECK(again[i] == contour[i]);
  }
}

TEST_CASE("contour point sampling back-projects real contour pixels") {
  const TriangleMesh cube = make_cube(0.1);
  const Pose pose{UnitQuaternion::from_axis_angle({0.3, 1.0, 0.2}, 0.6), {0.01, -0.02, 0.5}};
  const DepthMap depth = render_depth(cube, pose, kView);
  const auto contour = extract_contour_pixels(extract_silhouette(depth));
  REQUIRE(contour.size() > 20);

  SUBCASE("requesting one point returns the first row-major contour pixel") {
    const ContourPointSet one = sample_contour_points_3d(depth, kView, 1);
    REQUIRE(one.points.size() == 1);
    const ImagePoint ip = project(one.points[0], kView);
    CHECK(std::abs(ip.u - contour[0].u) < 1e-9);
    CHECK(std::abs(ip.v - contour[0].v) < 1e-9);
  }

  SUBCASE("every sampled point reprojects onto a contour pixel") {
    const ContourPointSet pts = sample_contour_points_3d(depth, kView, 50);
    REQUIRE(pts.points.size() == 50);
    for (const Vec3& p : pts.points) {
      const ImagePoint ip = project(p, kView);
      double best = 1e30;
      for (const PixelCoord& c : contour) best = std::min(best, std::hypot(ip.u - c.u, ip.v - c.v));
      CHECK(best < 0.5);
      CHECK(best < 1e-6);
    }
  }

  SUBCASE("requesting at least the contour size returns every pixel") {
    const ContourPointSet all =
        sample_contour_points_3d(depth, kView, static_cast<int>(contour.size()) + 10);
    CHECK(all.points.size() == contour.size());
  }

  SUBCASE("empty render throws") {
    CHECK_THROWS_AS(sample_contour_points_3d(DepthMap::background(32, 32), kView, 10),
                    EmptyContourError);
  }
}

TEST_CASE("distance transform is exact") {
  SUBCASE("single contour pixel") {
    const DistanceField f = distance_transform({{1, 1}}, 3, 3);
    CHECK(f.at(1, 1) == 0.0);
    CHECK(f.at(0, 0) == std::sqrt(2.0));
    CHECK(f.at(2, 1) == 1.0);
    CHECK(f.at(2, 2) == std::sqrt(2.0));
    CHECK(f.at(1, 0) == 1.0);
  }

  SUBCASE("matches the brute-force oracle on random contours") {
    Rng rng(123);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      const auto contour = random_contour(rng, 20, 64, 64);
      const DistanceField fast = distance_transform(contour, 64, 64);
      const DistanceField slow = reference::distance_transform(contour, 64, 64);
      for (size_t i = 0; i < fast.values.size(); ++i) {
        worst = std::max(worst, std::abs(fast.values[i] - slow.values[i]));
      }
      for (const PixelCoord& c : contour) CHECK(fast.at(c.u, c.v) == 0.0);
    }
    CHECK(worst <= 1e-9);
  }

  SUBCASE("is 1-Lipschitz on the pixel grid") {
    Rng rng(321);
    const auto contour = random_contour(rng, 30, 48, 40);
    const DistanceField f = distance_transform(contour, 48, 40);
    for (int v = 0; v < 40; ++v) {
      for (int u = 0; u < 48; ++u) {
        if (u + 1 < 48) CHECK(std::abs(f.at(u + 1, v) - f.at(u, v)) <= 1.0 + 1e-12);
        if (v + 1 < 40) CHECK(std::abs(f.at(u, v + 1) - f.at(u, v)) <= 1.0 + 1e-12);
        if (u + 1 < 48 && v + 1 < 40) {
          CHECK(std::abs(f.at(u + 1, v + 1) - f.at(u, v)) <= std::sqrt(2.0) + 1e-12);
        }
      }
    }
  }

  SUBCASE("rejects empty and out-of-range input") {
    CHECK_THROWS_AS(distance_transform({}, 8, 8), EmptyContourError);
    CHECK_THROWS_AS(distance_transform({{8, 0}}, 8, 8), std::invalid_argument);
    CHECK_THROWS_AS(distance_transform({{0, -1}}, 8, 8), std::invalid_argument);
  }
}

TEST_CASE("distance field sampling") {
  DistanceField tiny{2, 1, {0.0, 2.0}};

  SUBCASE("integer positions return stored values, midpoints average") {
    CHECK(sample_distance(tiny, 0.0, 0.0).value == 0.0);
    CHECK(sample_distance(tiny, 1.0, 0.0).value == 2.0);
    const DistanceSample mid = sample_distance(tiny, 0.5, 0.0);
    CHECK(mid.value == 1.0);
    CHECK(mid.du == 2.0);
    CHECK(mid.dv == 0.0);
  }

  Rng rng(55);
  const auto contour = random_contour(rng, 25, 32, 32);
  const DistanceField field = distance_transform(contour, 32, 32);

  SUBCASE("analytic gradient matches finite differences inside cells") {
    const double h = 1e-4;
    for (int i = 0; i < 500; ++i) {
      const double u = rng.uniform(1.0, 30.0);
      const double v = rng.uniform(1.0, 30.0);
      const double fu = u - std::floor(u), fv = v - std::floor(v);
      if (fu < 0.01 || fu > 0.99 || fv < 0.01 || fv > 0.99) continue;
      const DistanceSample s = sample_distance(field, u, v);
      const double fd_u = (sample_distance(field, u + h, v).value - sample_distance(field, u - h, v).value) / (2.0 * h);
      const double fd_v = (sample_distance(field, u, v + h).value - sample_distance(field, u, v - h).value) / (2.0 * h);
      CHECK(std::abs(s.du - fd_u) < 1e-6);
      CHECK(std::abs(s.dv - fd_v) < 1e-6);
    }
  }

  SUBCASE("value is continuous across cell boundaries") {
    const double eps = 1e-12;
    for (int boundary = 1; boundary < 31; ++boundary) {
      const double v = 7.3;
      const double left = sample_distance(field, boundary - eps, v).value;
      const double right = sample_distance(field, boundary + eps, v).value;
      CHECK(std::abs(left - right) < 1e-9);
      const double up = sample_distance(field, v, boundary - eps).value;
      const double down = sample_distance(field, v, boundary + eps).value;
      CHECK(std::abs(up - down) < 1e-9);
    }
  }

  SUBCASE("outside the field the value grows with slope one back to the edge") {
    const DistanceSample left = sample_distance(field, -3.0, 10.5);
    const DistanceSample edge = sample_distance(field, 0.0, 10.5);
    CHECK(left.value == doctest::Approx(edge.value + 3.0).epsilon(1e-12));
    CHECK(left.du == -1.0);
    CHECK(left.dv == edge.dv);

    const DistanceSample corner = sample_distance(field, -3.0, -4.0);
    CHECK(corner.value == doctest::Approx(field.at(0, 0) + 5.0).epsilon(1e-12));
    CHECK(corner.du == doctest::Approx(-0.6).epsilon(1e-12));
    CHECK(corner.dv == doctest::Approx(-0.8).epsilon(1e-12));
  }
}

TEST_CASE("window sizing") {
  const TriangleMesh sphere = make_icosphere(0.1, 4);

  SUBCASE("sphere window matches the closed-form extent") {
    const int w = compute_window_size(sphere, kView, 0.5, 8, 0.0, 7);
    const int expected = 2 * static_cast<int>(std::ceil(500.0 * 0.1 / std::sqrt(0.5 * 0.5 - 0.1 * 0.1)));
    CHECK(std::abs(w - expected) <= 2);
  }

  SUBCASE("padding scales the unpadded window") {
    const int base = compute_window_size(sphere, kView, 0.5, 8, 0.0, 7);
    const int padded = compute_window_size(sphere, kView, 0.5, 8, 0.2, 7);
    CHECK(padded == static_cast<int>(std::ceil(base * 1.2)));
  }

  SUBCASE("sphere window is rotation-invariant") {
    Rng rng(77);
    TriangleMesh rotated = sphere;
    const UnitQuaternion q = random_rotation(rng);
    for (Vec3& v : rotated.vertices) v = q.rotate(v);
    const int a = compute_window_size(sphere, kView, 0.5, 8, 0.2, 7);
    const int b = compute_window_size(rotated, kView, 0.5, 8, 0.2, 7);
    CHECK(std::abs(a - b) <= 2);
  }

  SUBCASE("distance not exceeding the radius is rejected") {
    CHECK_THROWS_AS(compute_window_size(sphere, kView, 0.05, 8, 0.2, 7), std::invalid_argument);
  }

  SUBCASE("a view that misses the image is degenerate") {
    const CameraIntrinsics off{500.0, 500.0, -5000.0, 240.0, 640, 480};
    CHECK_THROWS_AS(compute_window_size(sphere, off, 0.5, 8, 0.2, 7), DegenerateViewError);
  }
}

TEST_CASE("cropping and window intrinsics") {
  DepthMap src = DepthMap::background(10, 8);
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 10; ++u) src.at(u, v) = u + 100.0 * v;
  }

  SUBCASE("interior crop copies the subrectangle") {
    const CropPatch<DepthMap> patch = crop_patch(src, 5, 4, 4, DepthMap::kBackground);
    CHECK(patch.origin_u == 3);
    CHECK(patch.origin_v == 2);
    for (int v = 0; v < 4; ++v) {
      for (int u = 0; u < 4; ++u) CHECK(patch.image.at(u, v) == src.at(u + 3, v + 2));
    }
  }

  SUBCASE("out-of-bounds pixels take the fill value") {
    const CropPatch<DepthMap> patch = crop_patch(src, 0, 0, 4, DepthMap::kBackground);
    CHECK(patch.origin_u == -2);
    CHECK(patch.origin_v == -2);
    CHECK(std::isinf(patch.image.at(0, 0)));
    CHECK(patch.image.at(2, 2) == src.at(0, 0));
  }

  SUBCASE("window intrinsics shift projections by the crop origin") {
    const CameraIntrinsics win = window_intrinsics(kView, 130, 90, 160);
    CHECK(win.width == 160);
    CHECK(win.height == 160);
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
      const Vec3 p{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.3, 1.5)};
      const ImagePoint full = project(p, kView);
      const ImagePoint crop = project(p, win);
      CHECK(crop.u == doctest::Approx(full.u - 130.0).epsilon(1e-12));
      CHECK(crop.v == doctest::Approx(full.v - 90.0).epsilon(1e-12));
    }
  }
}
