#include "poseref/bench.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "poseref/parallel.hpp"

namespace poseref {

void validate(const PerturbationSpec& spec) {
  if (spec.rotation_degrees.empty() && spec.translation_fractions.empty()) {
    throw std::invalid_argument("perturbation spec: no levels");
  }
  for (double d : spec.rotation_degrees) {
    if (d < 0.0 || d > 180.0) throw std::invalid_argument("perturbation spec: rotation level out of range");
  }
  for (double f : spec.translation_fractions) {
    if (f < 0.0 || f > 1.5) throw std::invalid_argument("perturbation spec: translation fraction out of range");
  }
  if (spec.trials_per_level < 1) throw std::invalid_argument("perturbation spec: trials_per_level must be positive");
  if (!(spec.min_distance > 0.0)) throw std::invalid_argument("perturbation spec: min_distance must be positive");
  if (spec.window_views < 1) throw std::invalid_argument("perturbation spec: window_views must be positive");
}

Pose perturb_pose(const Pose& ground_truth, double angle_deg, double fraction, double diameter,
                  uint64_t seed) {
  if (angle_deg < 0.0) throw std::invalid_argument("perturb_pose: negative angle");
  if (fraction < 0.0) throw std::invalid_argument("perturb_pose: negative fraction");
  if (!(diameter > 0.0)) throw std::invalid_argument("perturb_pose: diameter must be positive");

  Rng rng(seed);
  const Vec3 axis = random_unit_vector(rng);
  const Vec3 direction = random_unit_vector(rng);

  Pose out = ground_truth;
  if (angle_deg > 0.0) {
    out.rotation = UnitQuaternion::from_axis_angle(axis, deg_to_rad(angle_deg)) * out.rotation;
  }
  out.translation += (fraction * diameter) * direction;
  return out;
}

double vss_score(const SilhouetteMask& a, const SilhouetteMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("vss_score: mask dimensions differ");
  }
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const bool fa = a.values[i] != 0;
    const bool fb = b.values[i] != 0;
    inter += fa && fb;
    uni += fa || fb;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double add_error(const TriangleMesh& mesh, const Pose& a, const Pose& b) {
  if (mesh.vertices.empty()) throw std::invalid_argument("add_error: mesh has no vertices");
  double sum = 0.0;
  for (const Vec3& v : mesh.vertices) {
    sum += norm(transform_point(a, v) - transform_point(b, v));
  }
  return sum / static_cast<double>(mesh.vertices.size());
}

bool add_correct(double add_value, double diameter) { return add_value < 0.1 * diameter; }

PoseErrors rotation_translation_errors(const Pose& estimate, const Pose& ground_truth) {
  PoseErrors e;
  e.rotation_deg = rad_to_deg(angle_between(estimate.rotation, ground_truth.rotation));
  const Vec3 d = estimate.translation - ground_truth.translation;
  e.tx = std::abs(d.x);
  e.ty = std::abs(d.y);
  e.tz = std::abs(d.z);
  e.translation_m = norm(d);
  return e;
}

namespace {

Pose sample_ground_truth_pose(Rng& rng, double min_distance) {
  const double azimuth = rng.uniform(0.0, 2.0 * kPi);
  const double elevation = rng.uniform(0.0, 0.5 * kPi);
  const double roll = rng.uniform(0.0, 2.0 * kPi);
  const double distance = rng.uniform(min_distance, 2.0 * min_distance);

  const double ce = std::cos(elevation);
  const Vec3 view_dir{ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
  const UnitQuaternion align = UnitQuaternion::shortest_arc(view_dir, {0.0, 0.0, 1.0});
  const UnitQuaternion rot = UnitQuaternion::from_axis_angle({0.0, 0.0, 1.0}, roll) * align;

  // Small lateral offset keeps poses off the exact optical axis while the
  // object stays well inside the frame.
  const double jitter = 0.02 * distance;
  return {rot, {rng.uniform(-jitter, jitter), rng.uniform(-jitter, jitter), distance}};
}

struct TrialTask {
  std::string mode;
  double level = 0.0;
  int mode_index = 0;
  int level_index = 0;
  int trial = 0;
};

TrialRecord run_trial(const TriangleMesh& mesh, const CameraIntrinsics& k, const PerturbationSpec& spec,
                      const RefinementConfig& config, const std::string& object_name, double diameter,
                      int window, const TrialTask& task) {
  TrialRecord rec;
  rec.object = object_name;
  rec.mode = task.mode;
  rec.level = task.level;
  rec.seed = mix_seed(spec.seed, (static_cast<uint64_t>(task.mode_index) << 40) |
                                     (static_cast<uint64_t>(task.level_index) << 20) |
                                     static_cast<uint64_t>(task.trial));

  Rng rng(rec.seed);
  const Pose ground_truth = sample_ground_truth_pose(rng, spec.min_distance);
  const double angle = task.mode == "rot" ? task.level : 0.0;
  const double fraction = task.mode == "trans" ? task.level : 0.0;
  const Pose initial = perturb_pose(ground_truth, angle, fraction, diameter, rng.next_u64());

  const PoseErrors init_err = rotation_translation_errors(initial, ground_truth);
  rec.init_rot_deg = init_err.rotation_deg;
  rec.init_trans_m = init_err.translation_m;

  Pose final_pose = initial;
  try {
    const SceneObservation obs = build_scene_observation(mesh, ground_truth, k, window);
    const RefinementResult result = refine_iterative(initial, obs.field, obs.points, mesh,
                                                     obs.window_view, config, &ground_truth, diameter);
    final_pose = result.final_pose;
    rec.termination = to_string(result.termination);
    rec.iterations = result.iterations();
    rec.wall_ms = result.wall_seconds * 1000.0;
  } catch (const std::exception&) {
    rec.termination = to_string(Termination::kError);
  }

  const PoseErrors final_err = rotation_translation_errors(final_pose, ground_truth);
  rec.final_rot_deg = final_err.rotation_deg;
  rec.final_trans_m = final_err.translation_m;
  rec.tx = final_err.tx;
  rec.ty = final_err.ty;
  rec.tz = final_err.tz;

  try {
    rec.vss = vss_score(extract_silhouette(render_depth(mesh, ground_truth, k)),
                        extract_silhouette(render_depth(mesh, final_pose, k)));
  } catch (const std::exception&) {
    rec.vss = 0.0;  // final pose not renderable: count as no overlap
  }
  rec.add_m = add_error(mesh, final_pose, ground_truth);
  rec.add_correct = add_correct(rec.add_m, diameter);
  return rec;
}

const char* const kCsvHeader =
    "object,mode,level,seed,init_rot_deg,final_rot_deg,init_trans_m,final_trans_m,"
    "tx,ty,tz,vss,add_m,add_correct,termination,iterations,wall_ms";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

std::vector<TrialRecord> run_perturbation_benchmark(const TriangleMesh& mesh, const CameraIntrinsics& k,
                                                    const PerturbationSpec& spec,
                                                    const RefinementConfig& config,
                                                    const std::string& object_name) {
  validate(spec);
  validate(config);
  const double diameter = mesh_diameter(mesh);
  const int window =
      compute_window_size(mesh, k, spec.min_distance, spec.window_views, config.window_padding_fraction, spec.seed);

  std::vector<TrialTask> tasks;
  for (size_t li = 0; li < spec.rotation_degrees.size(); ++li) {
    for (int t = 0; t < spec.trials_per_level; ++t) {
      tasks.push_back({"rot", spec.rotation_degrees[li], 0, static_cast<int>(li), t});
    }
  }
  for (size_t li = 0; li < spec.translation_fractions.size(); ++li) {
    for (int t = 0; t < spec.trials_per_level; ++t) {
      tasks.push_back({"trans", spec.translation_fractions[li], 1, static_cast<int>(li), t});
    }
  }

  std::vector<TrialRecord> records(tasks.size());
  const int n = static_cast<int>(tasks.size());
  POSEREF_PRAGMA_OMP(omp parallel for schedule(dynamic))
  for (int i = 0; i < n; ++i) {
    records[i] = run_trial(mesh, k, spec, config, object_name, diameter, window, tasks[i]);
  }
  return records;
}

std::string results_to_csv(const std::vector<TrialRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  char seed_buf[32];
  for (const TrialRecord& r : records) {
    std::snprintf(seed_buf, sizeof(seed_buf), "%" PRIu64, r.seed);
    out += r.object + ',' + r.mode + ',' + format_double(r.level) + ',' + seed_buf + ',' +
           format_double(r.init_rot_deg) + ',' + format_double(r.final_rot_deg) + ',' +
           format_double(r.init_trans_m) + ',' + format_double(r.final_trans_m) + ',' +
           format_double(r.tx) + ',' + format_double(r.ty) + ',' + format_double(r.tz) + ',' +
           format_double(r.vss) + ',' + format_double(r.add_m) + ',' + (r.add_correct ? "1" : "0") + ',' +
           r.termination + ',' + std::to_string(r.iterations) + ',' + format_double(r.wall_ms) + '\n';
  }
  return out;
}

void export_results_csv(const std::vector<TrialRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_results_csv: cannot open " + path.string());
  out << results_to_csv(records);
  if (!out) throw std::runtime_error("export_results_csv: failed writing " + path.string());
}

std::vector<TrialRecord> parse_results_csv(const std::string& csv) {
  std::stringstream ss(csv);
  std::string line;
  if (!std::getline(ss, line)) throw ParseError("results csv: empty input");
  if (line != kCsvHeader) throw ParseError("results csv: unexpected header: " + line);

  std::vector<TrialRecord> records;
  int line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 17) {
      throw ParseError("results csv: line " + std::to_string(line_no) + ": expected 17 fields, got " +
                       std::to_string(f.size()));
    }
    try {
      TrialRecord r;
      r.object = f[0];
      r.mode = f[1];
      r.level = std::stod(f[2]);
      r.seed = std::stoull(f[3]);
      r.init_rot_deg = std::stod(f[4]);
      r.final_rot_deg = std::stod(f[5]);
      r.init_trans_m = std::stod(f[6]);
      r.final_trans_m = std::stod(f[7]);
      r.tx = std::stod(f[8]);
      r.ty = std::stod(f[9]);
      r.tz = std::stod(f[10]);
      r.vss = std::stod(f[11]);
      r.add_m = std::stod(f[12]);
      r.add_correct = f[13] == "1";
      r.termination = f[14];
      r.iterations = std::stoi(f[15]);
      r.wall_ms = std::stod(f[16]);
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError("results csv: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<LevelSummary> summarize(const std::vector<TrialRecord>& records, double diameter) {
  if (!(diameter > 0.0)) throw std::invalid_argument("summarize: diameter must be positive");
  std::vector<LevelSummary> out;
  for (const TrialRecord& r : records) {
    LevelSummary* bucket = nullptr;
    for (LevelSummary& s : out) {
      if (s.mode == r.mode && s.level == r.level) {
        bucket = &s;
        break;
      }
    }
    if (bucket == nullptr) {
      out.push_back({r.mode, r.level, 0, 0, 0, 0, 0, 0, 0});
      bucket = &out.back();
    }
    ++bucket->trials;
    bucket->fraction_rot_below_5deg += r.final_rot_deg < 5.0;
    bucket->fraction_rot_below_10deg += r.final_rot_deg < 10.0;
    bucket->fraction_diverged += r.termination == "diverged" || r.termination == "error";
    bucket->mean_vss += r.vss;
    bucket->add_rate += r.add_correct;
    bucket->fraction_recovered += r.final_rot_deg < 5.0 && r.final_trans_m < 0.05 * diameter;
  }
  for (LevelSummary& s : out) {
    const double n = s.trials;
    s.fraction_rot_below_5deg /= n;
    s.fraction_rot_below_10deg /= n;
    s.fraction_diverged /= n;
    s.mean_vss /= n;
    s.add_rate /= n;
    s.fraction_recovered /= n;
  }
  return out;
}

std::string summary_to_json(const std::vector<LevelSummary>& summary, const std::string& object_name,
                            double diameter) {
  nlohmann::json doc;
  doc["object"] = object_name;
  doc["diameter_m"] = diameter;
  doc["levels"] = nlohmann::json::array();
  for (const LevelSummary& s : summary) {
    doc["levels"].push_back({{"mode", s.mode},
                             {"level", s.level},
                             {"trials", s.trials},
                             {"fraction_rot_below_5deg", s.fraction_rot_below_5deg},
                             {"fraction_rot_below_10deg", s.fraction_rot_below_10deg},
                             {"fraction_diverged", s.fraction_diverged},
                             {"mean_vss", s.mean_vss},
                             {"add_rate", s.add_rate},
                             {"fraction_recovered", s.fraction_recovered}});
  }
  return doc.dump(2);
}

}  // namespace poseref
