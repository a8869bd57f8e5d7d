#include "poseref/loss.hpp"

#include <cmath>
#include <string>

namespace poseref {

namespace {

double raw_norm(const std::array<double, 4>& raw) {
  const double n = std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]);
  if (!(n > 1e-300) || !std::isfinite(n)) {
    throw std::invalid_argument("loss: update quaternion is zero or non-finite");
  }
  return n;
}

// Derivative of rotate(q, v) with respect to the four unit quaternion
// components, as four 3-vectors [d/dw, d/dx, d/dy, d/dz]. For r = q v q*
// written as r = v + 2w(u x v) + 2u x (u x v) with u the vector part:
//   dr/dw   = 2 (u x v)
//   dr/du_j = 2w (e_j x v) + 2 [e_j x (u x v) + u x (e_j x v)]
std::array<Vec3, 4> rotate_jacobian(const UnitQuaternion& q, const Vec3& v) {
  const Vec3 u{q.x(), q.y(), q.z()};
  const Vec3 uxv = cross(u, v);
  std::array<Vec3, 4> jac;
  jac[0] = 2.0 * uxv;
  const Vec3 axes[3] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  for (int j = 0; j < 3; ++j) {
    const Vec3 ejxv = cross(axes[j], v);
    jac[j + 1] = 2.0 * (q.w() * ejxv + cross(axes[j], uxv) + cross(u, ejxv));
  }
  return jac;
}

// One directional term, gradient left unprojected (with respect to the unit
// quaternion components). `exact_inverse` switches the point transform from
// q v q* + t to q (v - t) q*, adjusting the translation chain accordingly.
struct TermEval {
  double value = 0.0;
  std::array<double, 4> g_q{};  // w.r.t. unit quaternion components
  Vec3 g_t;
  std::vector<double> residuals;
};

TermEval eval_term(const UnitQuaternion& q, const Vec3& t, const DistanceField& field,
                   const ContourPointSet& points, const CameraIntrinsics& k, bool exact_inverse,
                   const char* term_name) {
  if (points.points.empty()) throw std::invalid_argument("loss: empty contour point set");
  if (field.width != k.width || field.height != k.height) {
    throw std::invalid_argument("loss: distance field and intrinsics disagree on image size");
  }

  TermEval eval;
  eval.residuals.reserve(points.points.size());
  for (size_t i = 0; i < points.points.size(); ++i) {
    const Vec3& v = points.points[i];
    const Vec3 base = exact_inverse ? v - t : v;
    const Vec3 r = q.rotate(base);
    const Vec3 p = exact_inverse ? r : r + t;
    if (!(p.z > 0.0)) {
      throw BehindCameraError(std::string("loss: ") + term_name + " point " + std::to_string(i) +
                                  " transformed behind the camera (z=" + std::to_string(p.z) + ")",
                              static_cast<std::ptrdiff_t>(i));
    }

    const double u = k.fx * p.x / p.z + k.cx;
    const double w = k.fy * p.y / p.z + k.cy;
    const DistanceSample s = sample_distance(field, u, w);
    eval.residuals.push_back(s.value);
    eval.value += s.value;

    // Chain: dD/dp through the projection Jacobian.
    const Vec3 g_p{s.du * k.fx / p.z, s.dv * k.fy / p.z,
                   -(s.du * k.fx * p.x + s.dv * k.fy * p.y) / (p.z * p.z)};

    if (exact_inverse) {
      // p = q (v - t) q*: dp/dt = -R(q), so the pullback is -R(q)^T g_p.
      eval.g_t -= q.conjugate().rotate(g_p);
    } else {
      eval.g_t += g_p;
    }

    const std::array<Vec3, 4> jac = rotate_jacobian(q, base);
    for (int j = 0; j < 4; ++j) eval.g_q[j] += dot(jac[j], g_p);
  }
  return eval;
}

// Chains a unit-quaternion gradient through normalization of the raw
// 4-vector: g_raw = (I - qq^T) g_unit / ||raw||.
std::array<double, 4> project_to_tangent(const std::array<double, 4>& g_unit, const UnitQuaternion& q,
                                         double norm_raw) {
  const std::array<double, 4> qv{q.w(), q.x(), q.y(), q.z()};
  double coeff = 0.0;
  for (int j = 0; j < 4; ++j) coeff += qv[j] * g_unit[j];
  std::array<double, 4> g{};
  for (int j = 0; j < 4; ++j) g[j] = (g_unit[j] - coeff * qv[j]) / norm_raw;
  return g;
}

// `flipped` records whether rotation() negated the raw vector to canonicalize
// the sign. The loss is even in the quaternion, so evaluating at the flipped
// point only negates the unit-level gradient; undo that here to keep the
// gradient consistent with the literal raw parameterization.
LossEval finalize(const TermEval& term, const UnitQuaternion& q, double norm_raw, bool flipped) {
  LossEval out;
  out.value = term.value;
  out.residuals = term.residuals;
  std::array<double, 4> g_q = project_to_tangent(term.g_q, q, norm_raw);
  if (flipped) {
    for (double& g : g_q) g = -g;
  }
  out.gradient = {g_q[0], g_q[1], g_q[2], g_q[3], term.g_t.x, term.g_t.y, term.g_t.z};
  return out;
}

}  // namespace

LossEval visual_loss(const UpdateParams& update, const DistanceField& field,
                     const ContourPointSet& points, const CameraIntrinsics& k) {
  const double n = raw_norm(update.rotation_raw);
  const UnitQuaternion q = update.rotation();
  const bool flipped = update.rotation_raw[0] < 0.0;
  return finalize(eval_term(q, update.translation, field, points, k, false, "forward"), q, n, flipped);
}

LossEval bidirectional_loss(const UpdateParams& update, const DistanceField& scene_field,
                            const ContourPointSet& hypothesis_points, const DistanceField& hypothesis_field,
                            const ContourPointSet& scene_points, const CameraIntrinsics& k,
                            ReverseTermMode mode) {
  const double n = raw_norm(update.rotation_raw);
  const UnitQuaternion q = update.rotation();
  const bool flipped = update.rotation_raw[0] < 0.0;
  const Vec3 t = update.translation;

  const TermEval forward = eval_term(q, t, scene_field, hypothesis_points, k, false, "forward");

  TermEval combined = forward;
  if (mode == ReverseTermMode::kConjugateNegate) {
    const TermEval reverse = eval_term(q.conjugate(), -t, hypothesis_field, scene_points, k, false, "reverse");
    combined.value += reverse.value;
    combined.residuals.insert(combined.residuals.end(), reverse.residuals.begin(), reverse.residuals.end());
    // Chain through q' = conj(q), t' = -t: vector-part and translation
    // gradients flip sign.
    combined.g_q[0] += reverse.g_q[0];
    for (int j = 1; j < 4; ++j) combined.g_q[j] -= reverse.g_q[j];
    combined.g_t -= reverse.g_t;
  } else {
    const TermEval reverse = eval_term(q.conjugate(), t, hypothesis_field, scene_points, k, true, "reverse");
    combined.value += reverse.value;
    combined.residuals.insert(combined.residuals.end(), reverse.residuals.begin(), reverse.residuals.end());
    combined.g_q[0] += reverse.g_q[0];
    for (int j = 1; j < 4; ++j) combined.g_q[j] -= reverse.g_q[j];
    combined.g_t += reverse.g_t;
  }
  return finalize(combined, q, n, flipped);
}

LossEval regression_loss(const UpdateParams& update, const UnitQuaternion& target_q,
                         const Vec3& target_t, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("regression_loss: gamma must be positive");
  const double n = raw_norm(update.rotation_raw);

  // Literal normalized raw quaternion, without sign canonicalization.
  std::array<double, 4> qn;
  for (int j = 0; j < 4; ++j) qn[j] = update.rotation_raw[j] / n;
  const std::array<double, 4> tq{target_q.w(), target_q.x(), target_q.y(), target_q.z()};

  double sq = 0.0;
  for (int j = 0; j < 4; ++j) sq += (tq[j] - qn[j]) * (tq[j] - qn[j]);
  const double rot_term = std::sqrt(sq);

  const Vec3 dt = target_t - update.translation;
  const double trans_term = norm(dt);

  LossEval out;
  out.value = rot_term + gamma * trans_term;
  out.residuals = {rot_term, gamma * trans_term};

  if (rot_term > 0.0) {
    std::array<double, 4> g_unit{};
    for (int j = 0; j < 4; ++j) g_unit[j] = (qn[j] - tq[j]) / rot_term;
    double coeff = 0.0;
    for (int j = 0; j < 4; ++j) coeff += qn[j] * g_unit[j];
    for (int j = 0; j < 4; ++j) out.gradient[j] = (g_unit[j] - coeff * qn[j]) / n;
  }
  if (trans_term > 0.0) {
    const Vec3 g = (-gamma / trans_term) * dt;
    out.gradient[4] = g.x;
    out.gradient[5] = g.y;
    out.gradient[6] = g.z;
  }
  return out;
}

}  // namespace poseref
