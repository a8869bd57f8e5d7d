#pragma once

#include <optional>
#include <string>
#include <vector>

#include "poseref/loss.hpp"

namespace poseref {

// Final pose error past either of these (strictly greater) counts as
// diverged, measured against ground truth when one is supplied.
inline constexpr double kDivergenceRotationDeg = 45.0;
inline constexpr double kDivergenceTranslationDiameters = 0.5;

struct RefinementConfig {
  int max_outer_iterations = 10;
  double stop_rotation_deg = 1.5;
  double stop_translation_m = 0.0075;
  int inner_steps_per_render = 20;
  // Line search starts each inner step at this scale: the rotation trial
  // moves `initial_step_scale` along the normalized tangent gradient and the
  // translation trial moves `initial_step_scale * diameter` meters along the
  // normalized translation gradient.
  double initial_step_scale = 0.1;
  double window_padding_fraction = 0.2;
  int contour_point_count = 100;
  bool use_bidirectional = true;
  bool use_exact_inverse_reverse_term = false;
};

void validate(const RefinementConfig& config);

enum class Termination { kConverged, kMaxIterations, kDiverged, kError };

std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct IterationRecord {
  double loss = 0.0;  // final accepted loss of the inner descent
  Pose update;        // the update applied this iteration
  double update_rotation_deg = 0.0;
  double update_translation_m = 0.0;
};

struct RefinementResult {
  Pose final_pose;
  std::vector<IterationRecord> trace;
  Termination termination = Termination::kMaxIterations;
  std::string error_message;
  double wall_seconds = 0.0;

  int iterations() const { return static_cast<int>(trace.size()); }
};

struct StepResult {
  UpdateParams update;
  std::vector<double> loss_trace;  // initial loss followed by one entry per inner step
};

// Scene observation the refiner aligns against, all in the crop window
// frame. `window_view` carries the shifted principal point, so rendering a
// hypothesis with it lands in the same pixel frame as `field`.
struct SceneObservation {
  DistanceField field;
  ContourPointSet points;
  SilhouetteMask mask;
  CameraIntrinsics window_view;
  int origin_u = 0;
  int origin_v = 0;
};

struct Occluder {
  TriangleMesh mesh;
  Pose pose;
};

// Renders the target (and occluder, sharing one depth comparison: occluder
// pixels are background for the mask but still hide the target), crops a
// `window`-sized patch centered on the visible silhouette's bounding box,
// and derives the distance field and contour points. Throws
// DegenerateSceneError when nothing of the target is visible.
SceneObservation build_scene_observation(const TriangleMesh& mesh, const Pose& ground_truth,
                                         const CameraIntrinsics& k, int window,
                                         const Occluder* occluder = nullptr,
                                         int contour_point_count = 100);

// One render-and-descend cycle: renders the hypothesis, then runs
// `inner_steps_per_render` gradient descent steps with backtracking line
// search (halve the step until the loss decreases, at most 10 halvings)
// starting from the identity update. Returns the best update found and the
// loss trace, which is non-increasing.
StepResult refine_step(const Pose& pose, const DistanceField& scene_field,
                       const ContourPointSet& scene_points, const TriangleMesh& mesh,
                       const CameraIntrinsics& k, const RefinementConfig& config,
                       double mesh_diameter_hint = 0.0);

// Pose error thresholds, exposed for direct unit testing.
bool update_below_stop_thresholds(const Pose& update, const RefinementConfig& config);
bool pose_diverged(const Pose& estimate, const Pose& ground_truth, double diameter);

// Outer loop: apply refine_step, re-render, repeat until the last update
// falls below both stop thresholds, the iteration budget runs out, or an
// error ends the run early. When ground truth is supplied (benchmarking),
// the final pose is classified as diverged using the fixed thresholds above.
RefinementResult refine_iterative(const Pose& initial, const DistanceField& scene_field,
                                  const ContourPointSet& scene_points, const TriangleMesh& mesh,
                                  const CameraIntrinsics& k, const RefinementConfig& config,
                                  const Pose* ground_truth = nullptr, double mesh_diameter_hint = 0.0);

}  // namespace poseref
