#pragma once

// Shared helpers for the test binaries: independent oracles (rotation
// matrices, finite differences) and fixture builders. Everything here must
// stay independent of the library internals it is used to check.

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "poseref/loss.hpp"
#include "poseref/raster.hpp"
#include "poseref/refine.hpp"
#include "poseref/rng.hpp"

namespace testsupport {

// Textbook quaternion-to-rotation-matrix conversion (Hamilton convention),
// used as the oracle for quaternion rotation.
struct Mat3 {
  double m[3][3];
};

inline Mat3 quat_to_matrix(const poseref::UnitQuaternion& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  return {{{1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)},
           {2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)},
           {2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)}}};
}

inline poseref::Vec3 matrix_rotate(const Mat3& r, const poseref::Vec3& v) {
  return {r.m[0][0] * v.x + r.m[0][1] * v.y + r.m[0][2] * v.z,
          r.m[1][0] * v.x + r.m[1][1] * v.y + r.m[1][2] * v.z,
          r.m[2][0] * v.x + r.m[2][1] * v.y + r.m[2][2] * v.z};
}

// Random quaternion from a raw 4-cube sample (not uniform over rotations,
// which no oracle test here needs; it exercises normalization with arbitrary
// input scales).
inline poseref::UnitQuaternion random_quaternion(poseref::Rng& rng) {
  while (true) {
    const double w = rng.uniform(-1.0, 1.0);
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    const double z = rng.uniform(-1.0, 1.0);
    if (w * w + x * x + y * y + z * z > 0.01) return poseref::UnitQuaternion::normalized(w, x, y, z);
  }
}

inline poseref::Vec3 random_vector(poseref::Rng& rng, double scale) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

inline double& vec_component(poseref::Vec3& v, int j) { return j == 0 ? v.x : (j == 1 ? v.y : v.z); }

// Central finite differences of a scalar loss with respect to the seven raw
// update parameters.
inline std::array<double, 7> fd_gradient(const std::function<double(const poseref::UpdateParams&)>& f,
                                         const poseref::UpdateParams& at, double h_quat = 1e-6,
                                         double h_trans = 1e-7) {
  std::array<double, 7> g{};
  for (int j = 0; j < 4; ++j) {
    poseref::UpdateParams hi = at, lo = at;
    hi.rotation_raw[j] += h_quat;
    lo.rotation_raw[j] -= h_quat;
    g[j] = (f(hi) - f(lo)) / (2.0 * h_quat);
  }
  for (int j = 0; j < 3; ++j) {
    poseref::UpdateParams hi = at, lo = at;
    vec_component(hi.translation, j) += h_trans;
    vec_component(lo.translation, j) -= h_trans;
    g[4 + j] = (f(hi) - f(lo)) / (2.0 * h_trans);
  }
  return g;
}

// Worst per-component deviation, scaled by the gradient's own magnitude.
inline double gradient_relative_error(const std::array<double, 7>& analytic,
                                      const std::array<double, 7>& fd) {
  double scale = 1e-6;
  for (double v : fd) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (int j = 0; j < 7; ++j) worst = std::max(worst, std::abs(analytic[j] - fd[j]) / scale);
  return worst;
}

// Keeps only points that, under `transform`, project at least `margin_px`
// inside the field and at least `lattice_gap` away (in both axes) from the
// integer pixel lattice. The bilinear interpolant is smooth only inside a
// cell, so finite differencing is meaningful only for points whose tiny FD
// motion stays within one cell; this filter enforces that without touching
// the gradient contract (a loss over any point subset is still the loss).
inline poseref::ContourPointSet filter_points_for_fd(
    const poseref::ContourPointSet& points,
    const std::function<poseref::Vec3(const poseref::Vec3&)>& transform,
    const poseref::CameraIntrinsics& k, double margin_px = 2.0, double lattice_gap = 1e-2) {
  poseref::ContourPointSet out;
  out.source_pose = points.source_pose;
  for (const poseref::Vec3& v : points.points) {
    const poseref::Vec3 p = transform(v);
    if (!(p.z > 0.0)) continue;
    const double u = k.fx * p.x / p.z + k.cx;
    const double w = k.fy * p.y / p.z + k.cy;
    if (u < margin_px || u > k.width - 1 - margin_px) continue;
    if (w < margin_px || w > k.height - 1 - margin_px) continue;
    const double fu = u - std::floor(u);
    const double fv = w - std::floor(w);
    if (fu < lattice_gap || fu > 1.0 - lattice_gap) continue;
    if (fv < lattice_gap || fv > 1.0 - lattice_gap) continue;
    out.points.push_back(v);
  }
  return out;
}

// Point transforms matching the three loss term directions.
inline std::function<poseref::Vec3(const poseref::Vec3&)> forward_transform(
    const poseref::UpdateParams& update) {
  const poseref::UnitQuaternion q = update.rotation();
  const poseref::Vec3 t = update.translation;
  return [q, t](const poseref::Vec3& v) { return q.rotate(v) + t; };
}

inline std::function<poseref::Vec3(const poseref::Vec3&)> reverse_transform(
    const poseref::UpdateParams& update, poseref::ReverseTermMode mode) {
  const poseref::UnitQuaternion qc = update.rotation().conjugate();
  const poseref::Vec3 t = update.translation;
  if (mode == poseref::ReverseTermMode::kConjugateNegate) {
    return [qc, t](const poseref::Vec3& v) { return qc.rotate(v) - t; };
  }
  return [qc, t](const poseref::Vec3& v) { return qc.rotate(v - t); };
}

// A rendered scene plus a rendered hypothesis in the shared window frame,
// ready for loss evaluation.
struct LossFixture {
  poseref::TriangleMesh mesh;
  double diameter = 0.0;
  poseref::Pose ground_truth;
  poseref::Pose hypothesis_pose;
  poseref::CameraIntrinsics view;  // window frame
  poseref::DistanceField scene_field;
  poseref::ContourPointSet scene_points;
  poseref::DistanceField hypothesis_field;
  poseref::ContourPointSet hypothesis_points;
};

inline LossFixture make_loss_fixture(const poseref::TriangleMesh& mesh, const poseref::Pose& ground_truth,
                                     const poseref::Pose& hypothesis_pose,
                                     const poseref::CameraIntrinsics& full_view, uint64_t seed,
                                     int contour_points = 150) {
  LossFixture fx;
  fx.mesh = mesh;
  fx.diameter = poseref::mesh_diameter(mesh);
  fx.ground_truth = ground_truth;
  fx.hypothesis_pose = hypothesis_pose;

  const int window =
      poseref::compute_window_size(mesh, full_view, 0.9 * norm(ground_truth.translation), 8, 0.4, seed);
  const poseref::SceneObservation obs =
      poseref::build_scene_observation(mesh, ground_truth, full_view, window, nullptr, contour_points);
  fx.view = obs.window_view;
  fx.scene_field = obs.field;
  fx.scene_points = obs.points;

  const poseref::DepthMap hyp_depth = poseref::render_depth(mesh, hypothesis_pose, fx.view);
  fx.hypothesis_points = poseref::sample_contour_points_3d(hyp_depth, fx.view, contour_points);
  fx.hypothesis_points.source_pose = hypothesis_pose;
  const auto hyp_contour = poseref::extract_contour_pixels(poseref::extract_silhouette(hyp_depth));
  fx.hypothesis_field = poseref::distance_transform(hyp_contour, fx.view.width, fx.view.height);
  return fx;
}

// Small random rigid update for gradient tests: rotation up to
// `max_angle_deg`, translation up to `max_trans` per axis.
inline poseref::UpdateParams random_small_update(poseref::Rng& rng, double max_angle_deg,
                                                 double max_trans) {
  const poseref::Vec3 axis = poseref::random_unit_vector(rng);
  const double angle = poseref::deg_to_rad(rng.uniform(-max_angle_deg, max_angle_deg));
  const poseref::UnitQuaternion q =
      angle == 0.0 ? poseref::UnitQuaternion() : poseref::UnitQuaternion::from_axis_angle(axis, angle);
  return poseref::UpdateParams(q, random_vector(rng, max_trans));
}

// Captures std::cout or std::cerr for CLI tests.
class StreamCapture {
 public:
  explicit StreamCapture(std::ostream& stream) : stream_(stream), old_(stream.rdbuf(buffer_.rdbuf())) {}
  ~StreamCapture() { stream_.rdbuf(old_); }
  std::string text() const { return buffer_.str(); }

 private:
  std::ostream& stream_;
  std::stringstream buffer_;
  std::streambuf* old_;
};

}  // namespace testsupport
