#include "poseref/refine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace poseref {

void validate(const RefinementConfig& config) {
  if (config.max_outer_iterations < 1) throw std::invalid_argument("config: max_outer_iterations must be positive");
  if (!(config.stop_rotation_deg > 0.0) || config.stop_rotation_deg >= kDivergenceRotationDeg) {
    throw std::invalid_argument("config: stop_rotation_deg must lie in (0, divergence threshold)");
  }
  if (!(config.stop_translation_m > 0.0)) throw std::invalid_argument("config: stop_translation_m must be positive");
  if (config.inner_steps_per_render < 1) throw std::invalid_argument("config: inner_steps_per_render must be positive");
  if (!(config.initial_step_scale > 0.0)) throw std::invalid_argument("config: initial_step_scale must be positive");
  if (config.window_padding_fraction < 0.0) throw std::invalid_argument("config: negative window padding");
  if (config.contour_point_count < 1) throw std::invalid_argument("config: contour_point_count must be positive");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kDiverged: return "diverged";
    case Termination::kError: return "error";
  }
  return "error";
}

Termination termination_from_string(const std::string& s) {
  if (s == "converged") return Termination::kConverged;
  if (s == "max_iterations") return Termination::kMaxIterations;
  if (s == "diverged") return Termination::kDiverged;
  if (s == "error") return Termination::kError;
  throw std::invalid_argument("unknown termination: " + s);
}

SceneObservation build_scene_observation(const TriangleMesh& mesh, const Pose& ground_truth,
                                         const CameraIntrinsics& k, int window,
                                         const Occluder* occluder, int contour_point_count) {
  if (window < 2) throw std::invalid_argument("build_scene_observation: window too small");

  DepthMap visible = render_depth(mesh, ground_truth, k);
  if (occluder != nullptr) {
    const DepthMap front = render_depth(occluder->mesh, occluder->pose, k);
    for (size_t i = 0; i < visible.values.size(); ++i) {
      if (front.values[i] <= visible.values[i]) visible.values[i] = DepthMap::kBackground;
    }
  }

  int u_min = visible.width, u_max = -1, v_min = visible.height, v_max = -1;
  for (int v = 0; v < visible.height; ++v) {
    for (int u = 0; u < visible.width; ++u) {
      if (!visible.is_foreground(u, v)) continue;
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
  }
  if (u_max < u_min) {
    throw DegenerateSceneError("build_scene_observation: target is fully occluded or out of view");
  }

  const CropPatch<DepthMap> crop =
      crop_patch(visible, (u_min + u_max) / 2, (v_min + v_max) / 2, window, DepthMap::kBackground);

  SceneObservation obs;
  obs.origin_u = crop.origin_u;
  obs.origin_v = crop.origin_v;
  obs.window_view = window_intrinsics(k, crop.origin_u, crop.origin_v, window);
  obs.mask = extract_silhouette(crop.image);

  const std::vector<PixelCoord> contour = extract_contour_pixels(obs.mask);
  if (contour.empty()) {
    throw DegenerateSceneError("build_scene_observation: visible silhouette left the crop window");
  }
  obs.field = distance_transform(contour, window, window);
  obs.points = sample_contour_points_3d(crop.image, obs.window_view, contour_point_count);
  obs.points.source_pose = ground_truth;
  return obs;
}

namespace {

// Derivative of p -> normalize(raw) p with respect to the raw quaternion
// components. Sign flips inside the normalization cancel because the
// rotation is quadratic in the quaternion.
std::array<Vec3, 4> rotate_jacobian(const std::array<double, 4>& raw, const Vec3& p) {
  double n2 = 0.0;
  for (double c : raw) n2 += c * c;
  const double n = std::sqrt(n2);
  const std::array<double, 4> q{raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n};
  const double w = q[0];
  const Vec3 u{q[1], q[2], q[3]};

  std::array<Vec3, 4> jac;
  for (int j = 0; j < 4; ++j) {
    std::array<double, 4> h{};
    h[j] = 1.0;
    for (int i = 0; i < 4; ++i) h[i] = (h[i] - q[i] * q[j]) / n;
    const Vec3 hu{h[1], h[2], h[3]};
    jac[j] = 2.0 * (h[0] * cross(u, p) + w * cross(hu, p) + cross(hu, cross(u, p)) +
                    cross(u, cross(hu, p)));
  }
  return jac;
}

}  // namespace

StepResult refine_step(const Pose& pose, const DistanceField& scene_field,
                       const ContourPointSet& scene_points, const TriangleMesh& mesh,
                       const CameraIntrinsics& k, const RefinementConfig& config,
                       double mesh_diameter_hint) {
  validate(config);
  const double diameter = mesh_diameter_hint > 0.0 ? mesh_diameter_hint : mesh_diameter(mesh);

  const DepthMap hyp_depth = render_depth(mesh, pose, k);
  const SilhouetteMask hyp_mask = extract_silhouette(hyp_depth);
  const std::vector<PixelCoord> hyp_contour = extract_contour_pixels(hyp_mask);
  if (hyp_contour.empty()) {
    throw DegenerateHypothesisError("refine_step: hypothesis renders to an empty silhouette");
  }
  ContourPointSet hyp_points = sample_contour_points_3d(hyp_depth, k, config.contour_point_count);
  hyp_points.source_pose = pose;

  DistanceField hyp_field;
  if (config.use_bidirectional) hyp_field = distance_transform(hyp_contour, k.width, k.height);
  const ReverseTermMode mode = config.use_exact_inverse_reverse_term ? ReverseTermMode::kExactInverse
                                                                     : ReverseTermMode::kConjugateNegate;

  const auto evaluate = [&](const UpdateParams& u) {
    return config.use_bidirectional
               ? bidirectional_loss(u, scene_field, hyp_points, hyp_field, scene_points, k, mode)
               : visual_loss(u, scene_field, hyp_points, k);
  };

  // The loss moves camera-space points p -> q p q* + t, a rotation about the
  // camera origin. For silhouettes that rotation is nearly indistinguishable
  // from a lateral translation, so direct descent on (q, t) crawls along a
  // narrow curved valley. The descent instead walks object-centered
  // coordinates: a rotation omega about the object center plus a center
  // displacement tau, mapped exactly onto loss parameters by
  // t(omega, tau) = tau + c - omega c with c the hypothesis position.
  // Measuring tau in units of the mesh diameter makes both blocks' image
  // sensitivities commensurate, so one normalized direction and one
  // line-search scale serve both.
  const Vec3 center = pose.translation;
  std::array<double, 4> omega{1.0, 0.0, 0.0, 0.0};
  Vec3 tau;

  const auto to_params = [&center](const std::array<double, 4>& raw, const Vec3& t_obj) {
    UpdateParams u = UpdateParams::from_raw(raw, Vec3{});
    u.translation = t_obj + center - u.rotation().rotate(center);
    return u;
  };

  UpdateParams params = to_params(omega, tau);
  LossEval eval = evaluate(params);  // errors at the identity update propagate

  StepResult result;
  result.loss_trace.reserve(config.inner_steps_per_render + 1);
  result.loss_trace.push_back(eval.value);

  struct Direction {
    std::array<double, 4> omega{};
    Vec3 sigma;
  };

  for (int step = 0; step < config.inner_steps_per_render; ++step) {
    const std::array<Vec3, 4> jac = rotate_jacobian(omega, center);
    const Vec3 g_t{eval.gradient[4], eval.gradient[5], eval.gradient[6]};
    std::array<double, 4> g_omega;
    double qn2 = 0.0;
    for (int j = 0; j < 4; ++j) {
      g_omega[j] = eval.gradient[j] - dot(g_t, jac[j]);
      qn2 += g_omega[j] * g_omega[j];
    }
    const Vec3 g_sigma = diameter * g_t;  // gradient in units of tau / diameter
    const double tn2 = dot(g_sigma, g_sigma);
    if (qn2 + tn2 < 1e-28) break;

    // Freshly sampled contour points sit exactly on pixel corners, where the
    // bilinear field is kinked and one block's one-sided derivative can veto
    // every scale of the combined direction. Fall back to each block alone,
    // then to per-axis pattern probes, before declaring the step stuck. The
    // depth axis leads the probes: its image signal is the weakest and is
    // otherwise buried under the lateral components.
    std::vector<Direction> candidates;
    candidates.reserve(15);
    if (qn2 >= 1e-28 && tn2 >= 1e-28) {
      Direction d;
      const double inv = 1.0 / std::sqrt(qn2 + tn2);
      for (int j = 0; j < 4; ++j) d.omega[j] = -inv * g_omega[j];
      d.sigma = -inv * g_sigma;
      candidates.push_back(d);
    }
    if (qn2 >= 1e-28) {
      Direction d;
      const double inv = 1.0 / std::sqrt(qn2);
      for (int j = 0; j < 4; ++j) d.omega[j] = -inv * g_omega[j];
      candidates.push_back(d);
    }
    if (tn2 >= 1e-28) {
      Direction d;
      d.sigma = (-1.0 / std::sqrt(tn2)) * g_sigma;
      candidates.push_back(d);
    }
    const std::array<Vec3, 3> axes{Vec3{0.0, 0.0, 1.0}, Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}};
    for (const Vec3& axis : axes) {
      for (double sign : {1.0, -1.0}) {
        Direction d;
        d.sigma = sign * axis;
        candidates.push_back(d);
      }
    }
    const UnitQuaternion q_cur = params.rotation();
    for (const Vec3& axis : axes) {
      // Tangent of theta -> from_axis_angle(axis, theta) * q at theta = 0.
      const UnitQuaternion t = UnitQuaternion::normalized(0.0, axis.x, axis.y, axis.z) * q_cur;
      for (double sign : {1.0, -1.0}) {
        Direction d;
        d.omega = {sign * t.w(), sign * t.x(), sign * t.y(), sign * t.z()};
        candidates.push_back(d);
      }
    }

    bool accepted = false;
    for (const Direction& dir : candidates) {
      double scale = config.initial_step_scale;
      for (int attempt = 0; attempt <= 10 && !accepted; ++attempt, scale *= 0.5) {
        std::array<double, 4> omega_trial;
        double on2 = 0.0;
        for (int j = 0; j < 4; ++j) {
          omega_trial[j] = omega[j] + scale * dir.omega[j];
          on2 += omega_trial[j] * omega_trial[j];
        }
        const double on = std::sqrt(on2);
        for (double& c : omega_trial) c /= on;  // keep the tangent maps unit-scaled
        const Vec3 tau_trial = tau + (scale * diameter) * dir.sigma;
        const UpdateParams trial = to_params(omega_trial, tau_trial);
        LossEval trial_eval;
        try {
          trial_eval = evaluate(trial);
        } catch (const BehindCameraError&) {
          continue;  // reject this trial step, keep halving
        }
        if (trial_eval.value < eval.value) {
          omega = omega_trial;
          tau = tau_trial;
          params = trial;
          eval = std::move(trial_eval);
          accepted = true;
        }
      }
      if (accepted) break;
    }
    result.loss_trace.push_back(eval.value);
    if (!accepted) break;  // no direction improved; later steps would repeat this
  }

  // In these coordinates the update is already in composition form: the
  // rotation turns the object in place and tau displaces its center, so
  // applying (rotation, tau) as a pose update reproduces exactly the
  // configuration the descent chose, and the stop rule measures the true
  // pose change.
  result.update = UpdateParams(params.rotation(), tau);
  return result;
}

bool update_below_stop_thresholds(const Pose& update, const RefinementConfig& config) {
  return rad_to_deg(rotation_angle(update.rotation)) < config.stop_rotation_deg &&
         norm(update.translation) < config.stop_translation_m;
}

bool pose_diverged(const Pose& estimate, const Pose& ground_truth, double diameter) {
  const double rot_deg = rad_to_deg(angle_between(estimate.rotation, ground_truth.rotation));
  const double trans = norm(estimate.translation - ground_truth.translation);
  return rot_deg > kDivergenceRotationDeg || trans > kDivergenceTranslationDiameters * diameter;
}

RefinementResult refine_iterative(const Pose& initial, const DistanceField& scene_field,
                                  const ContourPointSet& scene_points, const TriangleMesh& mesh,
                                  const CameraIntrinsics& k, const RefinementConfig& config,
                                  const Pose* ground_truth, double mesh_diameter_hint) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const double diameter = mesh_diameter_hint > 0.0 ? mesh_diameter_hint : mesh_diameter(mesh);

  RefinementResult result;
  result.final_pose = initial;
  result.termination = Termination::kMaxIterations;

  Pose pose = initial;
  for (int iter = 0; iter < config.max_outer_iterations; ++iter) {
    StepResult step;
    try {
      step = refine_step(pose, scene_field, scene_points, mesh, k, config, diameter);
    } catch (const std::exception& e) {
      result.termination = Termination::kError;
      result.error_message = e.what();
      break;
    }
    const Pose update = step.update.to_pose();
    pose = apply_update(pose, update);

    IterationRecord record;
    record.loss = step.loss_trace.back();
    record.update = update;
    record.update_rotation_deg = rad_to_deg(rotation_angle(update.rotation));
    record.update_translation_m = norm(update.translation);
    result.trace.push_back(record);

    if (update_below_stop_thresholds(update, config)) {
      result.termination = Termination::kConverged;
      break;
    }
  }

  result.final_pose = pose;
  if (ground_truth != nullptr && result.termination != Termination::kError &&
      pose_diverged(pose, *ground_truth, diameter)) {
    result.termination = Termination::kDiverged;
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace poseref
