#pragma once

#include <filesystem>
#include <string>

#include "poseref/bench.hpp"

namespace poseref {

// One experiment description, loaded from a single JSON file. Exactly one of
// mesh_path / mesh_primitive must be set. Validation happens eagerly on load.
struct ExperimentConfig {
  std::string mesh_path;
  std::string mesh_primitive = "cube:0.1";
  std::string object_name = "object";
  CameraIntrinsics intrinsics{500.0, 500.0, 320.0, 240.0, 640, 480};
  RefinementConfig refinement;
  PerturbationSpec perturbation;
  std::string output_directory = "out";
};

void validate(const ExperimentConfig& config);

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

// Resolves the configured mesh source (OBJ path or builtin primitive).
TriangleMesh load_configured_mesh(const ExperimentConfig& config);

// Pose <-> JSON ("rotation": [w, x, y, z], "translation": [x, y, z]).
std::string pose_to_json(const Pose& pose);
Pose pose_from_json(const std::string& json_text);

// "w,x,y,z,tx,ty,tz" as used by CLI flags. The quaternion part is normalized.
Pose parse_pose_csv(const std::string& text);

}  // namespace poseref
