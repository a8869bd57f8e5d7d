#pragma once

#include <array>

#include "poseref/raster.hpp"

namespace poseref {

// Rigid update candidate the optimizer works on. The rotation is kept as a
// raw (w, x, y, z) 4-vector so gradients can be taken with respect to the
// unnormalized components; consumers normalize where a rotation is needed.
struct UpdateParams {
  std::array<double, 4> rotation_raw{1.0, 0.0, 0.0, 0.0};
  Vec3 translation;

  UpdateParams() = default;  // identity update

  UpdateParams(const UnitQuaternion& q, const Vec3& t)
      : rotation_raw{q.w(), q.x(), q.y(), q.z()}, translation(t) {}

  static UpdateParams from_raw(const std::array<double, 4>& raw, const Vec3& t) {
    UpdateParams p;
    p.rotation_raw = raw;
    p.translation = t;
    return p;
  }

  UnitQuaternion rotation() const {
    return UnitQuaternion::normalized(rotation_raw[0], rotation_raw[1], rotation_raw[2], rotation_raw[3]);
  }

  void renormalize() {
    const UnitQuaternion q = rotation();
    rotation_raw = {q.w(), q.x(), q.y(), q.z()};
  }

  Pose to_pose() const { return {rotation(), translation}; }
};

// Loss value with its gradient. Gradient layout: [qw, qx, qy, qz, tx, ty, tz]
// where the quaternion block is the derivative with respect to the raw
// 4-vector, projected onto the unit-norm tangent plane. The summed value is
// canonical; mean() gives the scale-free per-point form.
struct LossEval {
  double value = 0.0;
  std::array<double, 7> gradient{};
  std::vector<double> residuals;

  double mean() const { return residuals.empty() ? 0.0 : value / static_cast<double>(residuals.size()); }
};

enum class ReverseTermMode {
  // Reverse the update by conjugating the quaternion and negating the
  // translation. This is not the exact rigid inverse (that would be
  // q^-1 * (v - t)), but keeps the two loss terms symmetric in the
  // parameters.
  kConjugateNegate,
  // Apply the exact inverse rigid transform to the scene points.
  kExactInverse,
};

// Sum over contour points of the scene distance field sampled at the
// projection of the update-transformed point. Throws BehindCameraError
// (with the point index) if a transformed point reaches z <= 0.
LossEval visual_loss(const UpdateParams& update, const DistanceField& field,
                     const ContourPointSet& points, const CameraIntrinsics& k);

// Forward term plus the reverse term with hypothesis and scene swapped.
// Residuals are the forward point residuals followed by the reverse ones.
LossEval bidirectional_loss(const UpdateParams& update, const DistanceField& scene_field,
                            const ContourPointSet& hypothesis_points, const DistanceField& hypothesis_field,
                            const ContourPointSet& scene_points, const CameraIntrinsics& k,
                            ReverseTermMode mode = ReverseTermMode::kConjugateNegate);

// || target_q - q/||q|| || + gamma * || target_t - t ||. The quaternion term
// deliberately compares raw 4-vectors (no sign canonicalization), so it can
// stay positive for updates that encode the same rotation differently;
// that asymmetry is what the visual loss avoids. Residuals are the rotation
// term then the weighted translation term.
LossEval regression_loss(const UpdateParams& update, const UnitQuaternion& target_q,
                         const Vec3& target_t, double gamma);

}  // namespace poseref
