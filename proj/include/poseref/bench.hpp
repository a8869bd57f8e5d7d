#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "poseref/refine.hpp"
#include "poseref/rng.hpp"

namespace poseref {

// Synthetic perturbation sweep: ground truth poses are sampled per trial,
// then perturbed either in rotation (degrees) or translation (fractions of
// the mesh diameter), one mode at a time.
struct PerturbationSpec {
  std::vector<double> rotation_degrees{5, 10, 15, 20, 25, 30, 35, 40, 45};
  std::vector<double> translation_fractions{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  int trials_per_level = 100;
  uint64_t seed = 1;
  // Ground truth sampling: distance uniform in [min_distance, 2*min_distance],
  // viewing direction over the upper hemisphere, uniform in-plane roll.
  double min_distance = 0.5;
  int window_views = 16;
};

void validate(const PerturbationSpec& spec);

// One row of the results table. Field order matches the CSV column order:
// object, mode, level, seed, init_rot_deg, final_rot_deg, init_trans_m,
// final_trans_m, tx, ty, tz, vss, add_m, add_correct, termination,
// iterations, wall_ms.
struct TrialRecord {
  std::string object;
  std::string mode;  // "rot" or "trans"
  double level = 0.0;
  uint64_t seed = 0;
  double init_rot_deg = 0.0;
  double final_rot_deg = 0.0;
  double init_trans_m = 0.0;
  double final_trans_m = 0.0;
  double tx = 0.0;  // per-axis absolute translation error, meters
  double ty = 0.0;
  double tz = 0.0;
  double vss = 0.0;
  double add_m = 0.0;
  bool add_correct = false;
  std::string termination;
  int iterations = 0;
  double wall_ms = 0.0;
};

// Applies a rotation of exactly `angle_deg` about a seeded random axis
// (composed as a left-multiplied update) and a translation of exactly
// `fraction * diameter` along a seeded random direction.
Pose perturb_pose(const Pose& ground_truth, double angle_deg, double fraction, double diameter,
                  uint64_t seed);

// Silhouette overlap: intersection over union. Two empty masks count as 1.
double vss_score(const SilhouetteMask& a, const SilhouetteMask& b);

// Mean per-vertex deviation between the two placements of the mesh.
double add_error(const TriangleMesh& mesh, const Pose& a, const Pose& b);
bool add_correct(double add_value, double diameter);

struct PoseErrors {
  double rotation_deg = 0.0;
  double tx = 0.0;  // absolute per-axis differences
  double ty = 0.0;
  double tz = 0.0;
  double translation_m = 0.0;
};

PoseErrors rotation_translation_errors(const Pose& estimate, const Pose& ground_truth);

// Runs the full sweep. Trials never abort the sweep: per-trial failures are
// recorded with termination "error". Trials are independent and may run
// concurrently; records come back in deterministic (mode, level, trial)
// order regardless of thread count.
std::vector<TrialRecord> run_perturbation_benchmark(const TriangleMesh& mesh, const CameraIntrinsics& k,
                                                    const PerturbationSpec& spec,
                                                    const RefinementConfig& config,
                                                    const std::string& object_name = "object");

void export_results_csv(const std::vector<TrialRecord>& records, const std::filesystem::path& path);
std::string results_to_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_results_csv(const std::string& csv);

struct LevelSummary {
  std::string mode;
  double level = 0.0;
  int trials = 0;
  double fraction_rot_below_5deg = 0.0;
  double fraction_rot_below_10deg = 0.0;
  double fraction_diverged = 0.0;
  double mean_vss = 0.0;
  double add_rate = 0.0;
  // Recovered: final rotation error < 5 degrees and final translation error
  // < 0.05 * diameter.
  double fraction_recovered = 0.0;
};

std::vector<LevelSummary> summarize(const std::vector<TrialRecord>& records, double diameter);

// JSON rendition of summarize(), written next to the CSV by the CLI.
std::string summary_to_json(const std::vector<LevelSummary>& summary, const std::string& object_name,
                            double diameter);

}  // namespace poseref
