#include "poseref/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "poseref/assets.hpp"
#include "poseref/bench.hpp"
#include "poseref/config.hpp"
#include "poseref/image_io.hpp"

namespace poseref {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string mesh;
  std::string primitive;
  std::string out;
  std::string pose;
  std::string init_pose;
  std::string gt_pose;
  std::string scene_mask;
  std::string pose_a;
  std::string pose_b;
  std::string intrinsics;
  uint64_t seed = 1;
  int max_iters = 10;
  bool no_bidirectional = false;
  double min_distance = 0.5;
  double padding = 0.2;
  int window_views = 16;
};

bool flag_given(const CLI::App* sub, const std::string& name) {
  const CLI::Option* option = sub->get_option_no_throw(name);
  return option != nullptr && option->count() > 0;
}

CameraIntrinsics parse_intrinsics_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string token;
  std::vector<double> values;
  while (std::getline(ss, token, ',')) {
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw UsageError("--intrinsics: bad number '" + token + "'");
    }
  }
  if (values.size() != 6) throw UsageError("--intrinsics expects fx,fy,cx,cy,width,height");
  const CameraIntrinsics k{values[0], values[1], values[2], values[3],
                           static_cast<int>(values[4]), static_cast<int>(values[5])};
  try {
    validate(k);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--intrinsics: ") + e.what());
  }
  return k;
}

Pose parse_pose_flag(const std::string& flag, const std::string& text) {
  try {
    return parse_pose_csv(text);
  } catch (const std::exception& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

json pose_json(const Pose& p) {
  return json{{"rotation", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
              {"translation", {p.translation.x, p.translation.y, p.translation.z}}};
}

json result_json(const RefinementResult& r) {
  json trace = json::array();
  for (const IterationRecord& rec : r.trace) {
    trace.push_back(json{{"loss", rec.loss},
                         {"update", pose_json(rec.update)},
                         {"update_rotation_deg", rec.update_rotation_deg},
                         {"update_translation_m", rec.update_translation_m}});
  }
  return json{{"final_pose", pose_json(r.final_pose)},
              {"termination", to_string(r.termination)},
              {"iterations", r.iterations()},
              {"wall_seconds", r.wall_seconds},
              {"error_message", r.error_message},
              {"trace", std::move(trace)}};
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (text.empty() || text.back() != '\n') f << '\n';
}

// Inputs shared by render/refine/metrics: a config file supplies defaults,
// explicit flags override them.
struct BaseInputs {
  std::optional<ExperimentConfig> config;
  TriangleMesh mesh;
  CameraIntrinsics view{500.0, 500.0, 320.0, 240.0, 640, 480};
  RefinementConfig refinement;
};

BaseInputs resolve_base(const CLI::App* sub, const Options& opt) {
  BaseInputs base;
  if (flag_given(sub, "--config")) base.config = load_experiment_config(opt.config_path);

  if (flag_given(sub, "--mesh")) {
    base.mesh = load_mesh_obj(opt.mesh);
  } else if (flag_given(sub, "--primitive")) {
    try {
      base.mesh = make_primitive(opt.primitive);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--primitive: ") + e.what());
    }
  } else if (base.config) {
    base.mesh = load_configured_mesh(*base.config);
  } else {
    throw UsageError(sub->get_name() + " needs a mesh: pass --mesh, --primitive, or --config");
  }

  if (flag_given(sub, "--intrinsics")) {
    base.view = parse_intrinsics_csv(opt.intrinsics);
  } else if (base.config) {
    base.view = base.config->intrinsics;
  }

  if (base.config) base.refinement = base.config->refinement;
  if (flag_given(sub, "--max-iters")) base.refinement.max_outer_iterations = opt.max_iters;
  if (flag_given(sub, "--no-bidirectional")) base.refinement.use_bidirectional = false;
  if (flag_given(sub, "--padding")) base.refinement.window_padding_fraction = opt.padding;
  try {
    validate(base.refinement);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return base;
}

int run_render(const CLI::App* sub, const Options& opt) {
  const BaseInputs base = resolve_base(sub, opt);
  const Pose pose = parse_pose_flag("--pose", opt.pose);

  const DepthMap depth = render_depth(base.mesh, pose, base.view);
  const SilhouetteMask mask = extract_silhouette(depth);
  const std::vector<PixelCoord> contour = extract_contour_pixels(mask);
  const DistanceField field = distance_transform(contour, base.view.width, base.view.height);

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  write_pgm(depth, dir / "depth.pgm");
  write_pgm(mask, dir / "mask.pgm");
  write_pgm(field, dir / "distance.pgm");
  std::cout << "wrote " << (dir / "depth.pgm").string() << ", " << (dir / "mask.pgm").string()
            << ", " << (dir / "distance.pgm").string() << " (" << contour.size()
            << " contour pixels)\n";
  return 0;
}

int run_refine(const CLI::App* sub, const Options& opt) {
  BaseInputs base = resolve_base(sub, opt);
  const Pose init = parse_pose_flag("--init-pose", opt.init_pose);

  const bool has_gt = flag_given(sub, "--gt-pose");
  const bool has_mask = flag_given(sub, "--scene-mask");
  if (has_gt == has_mask) {
    throw UsageError("refine needs exactly one of --gt-pose and --scene-mask");
  }

  const double diameter = mesh_diameter(base.mesh);
  RefinementResult result;
  if (has_gt) {
    const Pose gt = parse_pose_flag("--gt-pose", opt.gt_pose);
    const double min_distance = flag_given(sub, "--min-distance")
                                    ? opt.min_distance
                                    : (base.config ? base.config->perturbation.min_distance : 0.5);
    const int views = flag_given(sub, "--window-views")
                          ? opt.window_views
                          : (base.config ? base.config->perturbation.window_views : 16);
    const uint64_t seed =
        flag_given(sub, "--seed") ? opt.seed : (base.config ? base.config->perturbation.seed : 1);
    const int window = compute_window_size(base.mesh, base.view, min_distance, views,
                                           base.refinement.window_padding_fraction, seed);
    const SceneObservation obs = build_scene_observation(base.mesh, gt, base.view, window, nullptr,
                                                         base.refinement.contour_point_count);
    result = refine_iterative(init, obs.field, obs.points, base.mesh, obs.window_view,
                              base.refinement, &gt, diameter);
  } else {
    const SilhouetteMask mask = read_pgm_mask(opt.scene_mask);
    if (mask.width != base.view.width || mask.height != base.view.height) {
      throw UsageError("--scene-mask: mask is " + std::to_string(mask.width) + "x" +
                       std::to_string(mask.height) + " but intrinsics expect " +
                       std::to_string(base.view.width) + "x" + std::to_string(base.view.height));
    }
    const std::vector<PixelCoord> contour = extract_contour_pixels(mask);
    if (contour.empty()) throw EmptyContourError("--scene-mask: mask has no foreground");
    const DistanceField field = distance_transform(contour, mask.width, mask.height);
    // A mask carries no depth, so no scene contour points can be
    // back-projected; the refiner runs with the forward term only.
    base.refinement.use_bidirectional = false;
    result = refine_iterative(init, field, ContourPointSet{}, base.mesh, base.view, base.refinement,
                              nullptr, diameter);
  }

  const std::string text = result_json(result).dump(2);
  std::cout << text << "\n";
  if (flag_given(sub, "--out")) {
    fs::create_directories(opt.out);
    write_text_file(fs::path(opt.out) / "refine_result.json", text);
  }
  return 0;
}

int run_bench(const CLI::App* sub, const Options& opt) {
  ExperimentConfig cfg = load_experiment_config(opt.config_path);
  if (flag_given(sub, "--mesh")) {
    cfg.mesh_path = opt.mesh;
    cfg.mesh_primitive.clear();
  }
  if (flag_given(sub, "--primitive")) {
    cfg.mesh_primitive = opt.primitive;
    cfg.mesh_path.clear();
  }
  if (flag_given(sub, "--seed")) cfg.perturbation.seed = opt.seed;
  if (flag_given(sub, "--out")) cfg.output_directory = opt.out;
  if (flag_given(sub, "--max-iters")) cfg.refinement.max_outer_iterations = opt.max_iters;
  if (flag_given(sub, "--no-bidirectional")) cfg.refinement.use_bidirectional = false;
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const TriangleMesh mesh = load_configured_mesh(cfg);
  const std::vector<TrialRecord> records =
      run_perturbation_benchmark(mesh, cfg.intrinsics, cfg.perturbation, cfg.refinement, cfg.object_name);

  const fs::path dir(cfg.output_directory);
  fs::create_directories(dir);
  export_results_csv(records, dir / "results.csv");
  const double diameter = mesh_diameter(mesh);
  const std::vector<LevelSummary> summary = summarize(records, diameter);
  write_text_file(dir / "summary.json", summary_to_json(summary, cfg.object_name, diameter));

  std::cout << "wrote " << (dir / "results.csv").string() << " (" << records.size() << " trials)\n"
            << "wrote " << (dir / "summary.json").string() << "\n";
  for (const LevelSummary& s : summary) {
    std::cout << s.mode << " " << s.level << ": recovered " << s.fraction_recovered << ", diverged "
              << s.fraction_diverged << ", mean VSS " << s.mean_vss << "\n";
  }
  return 0;
}

int run_metrics(const CLI::App* sub, const Options& opt) {
  const BaseInputs base = resolve_base(sub, opt);
  const Pose a = parse_pose_flag("--pose-a", opt.pose_a);
  const Pose b = parse_pose_flag("--pose-b", opt.pose_b);

  const double diameter = mesh_diameter(base.mesh);
  const PoseErrors err = rotation_translation_errors(b, a);
  const double add = add_error(base.mesh, a, b);
  const SilhouetteMask mask_a = extract_silhouette(render_depth(base.mesh, a, base.view));
  const SilhouetteMask mask_b = extract_silhouette(render_depth(base.mesh, b, base.view));

  const json doc = {{"vss", vss_score(mask_a, mask_b)},
                    {"add_m", add},
                    {"add_correct", add_correct(add, diameter)},
                    {"diameter_m", diameter},
                    {"rotation_deg", err.rotation_deg},
                    {"translation_error_m",
                     {{"x", err.tx}, {"y", err.ty}, {"z", err.tz}, {"norm", err.translation_m}}}};
  const std::string text = doc.dump(2);
  std::cout << text << "\n";
  if (flag_given(sub, "--out")) {
    fs::create_directories(opt.out);
    write_text_file(fs::path(opt.out) / "metrics.json", text);
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  Options opt;
  CLI::App app{"Model-based 6D pose refinement by contour alignment", "poseref"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  const std::string pose_help = "pose as w,x,y,z,tx,ty,tz (unit quaternion + translation in meters)";

  CLI::App* render_cmd = app.add_subcommand("render", "Render depth, mask, and contour distance field images");
  CLI::App* refine_cmd = app.add_subcommand("refine", "Refine an initial pose against a scene observation");
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run the seeded perturbation benchmark from a config file");
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "Report VSS/ADD/rotation/translation errors between two poses");

  for (CLI::App* sub : {render_cmd, refine_cmd, metrics_cmd}) {
    sub->add_option("--config", opt.config_path, "experiment config JSON supplying mesh/intrinsics/refinement defaults");
    sub->add_option("--mesh", opt.mesh, "OBJ mesh path, units meters");
    sub->add_option("--primitive", opt.primitive,
                    "builtin mesh: cube:edge | icosphere:radius,level | cylinder:radius,height[,segments] | lbracket:a,b,t");
    sub->add_option("--intrinsics", opt.intrinsics, "fx,fy,cx,cy,width,height (default 500,500,320,240,640,480)");
  }

  render_cmd->add_option("--pose", opt.pose, pose_help)->required();
  render_cmd->add_option("--out", opt.out, "output directory")->required();

  refine_cmd->add_option("--init-pose", opt.init_pose, "initial " + pose_help)->required();
  refine_cmd->add_option("--gt-pose", opt.gt_pose, "ground truth " + pose_help + "; the scene is rendered from it");
  refine_cmd->add_option("--scene-mask", opt.scene_mask,
                         "scene silhouette PGM; implies the forward-only loss (a mask has no depth)");
  refine_cmd->add_option("--out", opt.out, "directory for refine_result.json (the result always prints to stdout)");
  refine_cmd->add_option("--seed", opt.seed, "window sizing seed (default 1)");
  refine_cmd->add_option("--max-iters", opt.max_iters, "outer iteration budget");
  refine_cmd->add_flag("--no-bidirectional", opt.no_bidirectional, "use the forward loss term only");
  refine_cmd->add_option("--min-distance", opt.min_distance,
                         "nearest object distance the crop window must cover, meters (default 0.5)");
  refine_cmd->add_option("--padding", opt.padding, "crop window padding fraction");
  refine_cmd->add_option("--window-views", opt.window_views, "probe view count for window sizing");

  bench_cmd->add_option("--config", opt.config_path, "experiment config JSON")->required();
  bench_cmd->add_option("--mesh", opt.mesh, "override the config mesh with an OBJ path");
  bench_cmd->add_option("--primitive", opt.primitive, "override the config mesh with a builtin");
  bench_cmd->add_option("--seed", opt.seed, "override the perturbation seed");
  bench_cmd->add_option("--out", opt.out, "override the output directory");
  bench_cmd->add_option("--max-iters", opt.max_iters, "override the outer iteration budget");
  bench_cmd->add_flag("--no-bidirectional", opt.no_bidirectional, "use the forward loss term only");

  metrics_cmd->add_option("--pose-a", opt.pose_a, "reference " + pose_help)->required();
  metrics_cmd->add_option("--pose-b", opt.pose_b, "estimate " + pose_help)->required();
  metrics_cmd->add_option("--out", opt.out, "directory for metrics.json (the report always prints to stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (render_cmd->parsed()) return run_render(render_cmd, opt);
    if (refine_cmd->parsed()) return run_refine(refine_cmd, opt);
    if (bench_cmd->parsed()) return run_bench(bench_cmd, opt);
    if (metrics_cmd->parsed()) return run_metrics(metrics_cmd, opt);
    std::cerr << app.help();
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace poseref
