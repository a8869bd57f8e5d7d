#include "poseref/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "poseref/assets.hpp"

namespace poseref {

using nlohmann::json;

void validate(const ExperimentConfig& config) {
  const bool has_path = !config.mesh_path.empty();
  const bool has_primitive = !config.mesh_primitive.empty();
  if (has_path == has_primitive) {
    throw std::invalid_argument("config: set exactly one of mesh.path and mesh.primitive");
  }
  if (has_path && !std::filesystem::exists(config.mesh_path)) {
    throw std::invalid_argument("config: mesh path does not exist: " + config.mesh_path);
  }
  if (config.object_name.empty()) throw std::invalid_argument("config: object_name must not be empty");
  if (config.output_directory.empty()) throw std::invalid_argument("config: output_directory must not be empty");
  validate(config.intrinsics);
  validate(config.refinement);
  validate(config.perturbation);
}

namespace {

void read_if_present(const json& j, const char* key, double* out) {
  if (j.contains(key)) *out = j.at(key).get<double>();
}
void read_if_present(const json& j, const char* key, int* out) {
  if (j.contains(key)) *out = j.at(key).get<int>();
}
void read_if_present(const json& j, const char* key, bool* out) {
  if (j.contains(key)) *out = j.at(key).get<bool>();
}
void read_if_present(const json& j, const char* key, uint64_t* out) {
  if (j.contains(key)) *out = j.at(key).get<uint64_t>();
}
void read_if_present(const json& j, const char* key, std::string* out) {
  if (j.contains(key)) *out = j.at(key).get<std::string>();
}
void read_if_present(const json& j, const char* key, std::vector<double>* out) {
  if (j.contains(key)) *out = j.at(key).get<std::vector<double>>();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  ExperimentConfig config;
  try {
    if (doc.contains("mesh")) {
      const json& m = doc.at("mesh");
      if (m.contains("path")) {
        config.mesh_path = m.at("path").get<std::string>();
        config.mesh_primitive.clear();
      }
      if (m.contains("primitive")) config.mesh_primitive = m.at("primitive").get<std::string>();
    }
    read_if_present(doc, "object_name", &config.object_name);
    if (doc.contains("intrinsics")) {
      const json& k = doc.at("intrinsics");
      read_if_present(k, "fx", &config.intrinsics.fx);
      read_if_present(k, "fy", &config.intrinsics.fy);
      read_if_present(k, "cx", &config.intrinsics.cx);
      read_if_present(k, "cy", &config.intrinsics.cy);
      read_if_present(k, "width", &config.intrinsics.width);
      read_if_present(k, "height", &config.intrinsics.height);
    }
    if (doc.contains("refinement")) {
      const json& r = doc.at("refinement");
      RefinementConfig& c = config.refinement;
      read_if_present(r, "max_outer_iterations", &c.max_outer_iterations);
      read_if_present(r, "stop_rotation_deg", &c.stop_rotation_deg);
      read_if_present(r, "stop_translation_m", &c.stop_translation_m);
      read_if_present(r, "inner_steps_per_render", &c.inner_steps_per_render);
      read_if_present(r, "initial_step_scale", &c.initial_step_scale);
      read_if_present(r, "window_padding_fraction", &c.window_padding_fraction);
      read_if_present(r, "contour_point_count", &c.contour_point_count);
      read_if_present(r, "use_bidirectional", &c.use_bidirectional);
      read_if_present(r, "use_exact_inverse_reverse_term", &c.use_exact_inverse_reverse_term);
    }
    if (doc.contains("perturbation")) {
      const json& p = doc.at("perturbation");
      PerturbationSpec& s = config.perturbation;
      read_if_present(p, "rotation_degrees", &s.rotation_degrees);
      read_if_present(p, "translation_fractions", &s.translation_fractions);
      read_if_present(p, "trials_per_level", &s.trials_per_level);
      read_if_present(p, "seed", &s.seed);
      read_if_present(p, "min_distance", &s.min_distance);
      read_if_present(p, "window_views", &s.window_views);
    }
    read_if_present(doc, "output_directory", &config.output_directory);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  validate(config);
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_experiment_config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_experiment_config(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json mesh;
  if (!config.mesh_path.empty()) {
    mesh["path"] = config.mesh_path;
  } else {
    mesh["primitive"] = config.mesh_primitive;
  }
  const json doc = {
      {"mesh", mesh},
      {"object_name", config.object_name},
      {"intrinsics",
       {{"fx", config.intrinsics.fx},
        {"fy", config.intrinsics.fy},
        {"cx", config.intrinsics.cx},
        {"cy", config.intrinsics.cy},
        {"width", config.intrinsics.width},
        {"height", config.intrinsics.height}}},
      {"refinement",
       {{"max_outer_iterations", config.refinement.max_outer_iterations},
        {"stop_rotation_deg", config.refinement.stop_rotation_deg},
        {"stop_translation_m", config.refinement.stop_translation_m},
        {"inner_steps_per_render", config.refinement.inner_steps_per_render},
        {"initial_step_scale", config.refinement.initial_step_scale},
        {"window_padding_fraction", config.refinement.window_padding_fraction},
        {"contour_point_count", config.refinement.contour_point_count},
        {"use_bidirectional", config.refinement.use_bidirectional},
        {"use_exact_inverse_reverse_term", config.refinement.use_exact_inverse_reverse_term}}},
      {"perturbation",
       {{"rotation_degrees", config.perturbation.rotation_degrees},
        {"translation_fractions", config.perturbation.translation_fractions},
        {"trials_per_level", config.perturbation.trials_per_level},
        {"seed", config.perturbation.seed},
        {"min_distance", config.perturbation.min_distance},
        {"window_views", config.perturbation.window_views}}},
      {"output_directory", config.output_directory},
  };
  return doc.dump(2);
}

TriangleMesh load_configured_mesh(const ExperimentConfig& config) {
  if (!config.mesh_path.empty()) return load_mesh_obj(config.mesh_path);
  return make_primitive(config.mesh_primitive);
}

std::string pose_to_json(const Pose& pose) {
  const json doc = {
      {"rotation", {pose.rotation.w(), pose.rotation.x(), pose.rotation.y(), pose.rotation.z()}},
      {"translation", {pose.translation.x, pose.translation.y, pose.translation.z}},
  };
  return doc.dump();
}

Pose pose_from_json(const std::string& json_text) {
  try {
    const json doc = json::parse(json_text);
    const auto r = doc.at("rotation").get<std::vector<double>>();
    const auto t = doc.at("translation").get<std::vector<double>>();
    if (r.size() != 4 || t.size() != 3) throw ParseError("pose: rotation needs 4 and translation 3 numbers");
    return {UnitQuaternion::normalized(r[0], r[1], r[2], r[3]), {t[0], t[1], t[2]}};
  } catch (const json::exception& e) {
    throw ParseError(std::string("pose: ") + e.what());
  }
}

Pose parse_pose_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string token;
  std::vector<double> values;
  while (std::getline(ss, token, ',')) {
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ParseError("pose: bad number '" + token + "'");
    }
  }
  if (values.size() != 7) {
    throw ParseError("pose: expected w,x,y,z,tx,ty,tz (7 numbers), got " + std::to_string(values.size()));
  }
  try {
    return {UnitQuaternion::normalized(values[0], values[1], values[2], values[3]),
            {values[4], values[5], values[6]}};
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("pose: ") + e.what());
  }
}

}  // namespace poseref
