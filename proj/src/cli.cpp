#include "procam/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "procam/calibrate.hpp"
#include "procam/error.hpp"
#include "procam/image_io.hpp"
#include "procam/io.hpp"
#include "procam/metrics.hpp"
#include "procam/simulator.hpp"
#include "procam/structured_light.hpp"

#ifndef PROCAM_VERSION
#define PROCAM_VERSION "0.0.0"
#endif

namespace procam {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::ordered_json json_num(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io:
      return kExitIo;
    case ErrorKind::InvalidArgument:
      return kExitUsage;
    default:
      return kExitSchema;
  }
}

SceneConfig load_scene(const std::string& path) {
  return path.empty() ? SceneConfig{} : read_scene_config(path);
}

// simulate

struct SimulateArgs {
  std::string config;
  std::string out;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::string stack_dir;
};

void write_stack(const SceneConfig& cfg, const CorrespondenceSet& corr, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  const GraycodeScene scene = synthesize_graycode_stack(cfg);
  StackManifest manifest{scene.layout.projector_width, scene.layout.projector_height, {}};
  for (std::size_t i = 0; i < scene.stack.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "pattern_%02zu.pgm", i);
    write_pgm(dir / name, scene.stack[i]);
    manifest.patterns.emplace_back(name);
  }
  write_manifest(dir / "manifest.json", manifest);
  write_corners(dir / "corners.json", {corr.board, corr.camera, corr.camera_distorted});
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SceneConfig cfg = load_scene(a.config);
  if (a.noise) cfg.noise_sigma_px = *a.noise;
  if (a.seed) cfg.rng_seed = *a.seed;
  const Observation obs = synthesize_observations(cfg);
  write_correspondences(a.out, {obs.correspondences, obs.truth});
  out << "wrote " << obs.correspondences.size() << " correspondences to " << a.out << "\n";
  if (!a.stack_dir.empty()) {
    write_stack(cfg, obs.correspondences, a.stack_dir);
    out << "wrote pattern stack to " << a.stack_dir << "\n";
  }
  return kExitOk;
}

// calibrate

struct CalibrateArgs {
  std::string input;
  std::string out;
  int lm_max_iters = LMConfig{}.max_iters;
  std::string report;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  const CorrespondenceFile file = read_correspondences(a.input);
  CalibrationConfig config;
  config.lm.max_iters = a.lm_max_iters;
  const CorrespondenceSet& corr = file.correspondences;
  const CalibrationResult result = calibrate_procam(corr, config);
  write_calibration(a.out, {result, PROCAM_VERSION});
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  if (!a.report.empty()) {
    const ReprojectionStats cam = reprojection_error(result.K_c, result.distortion, result.rt_c,
                                                     corr.board_points, corr.camera_distorted);
    const ReprojectionStats pro = reprojection_error(result.K_p, std::nullopt, result.rt_p,
                                                     corr.board_points, corr.projector_points);
    std::ostringstream csv;
    csv << "point,board_x_mm,board_y_mm,camera_residual_px,projector_residual_px\n";
    for (std::size_t i = 0; i < corr.size(); ++i) {
      csv << i << ',' << num(corr.board_points[i].x()) << ',' << num(corr.board_points[i].y())
          << ',' << num(cam.per_point_px[i]) << ',' << num(pro.per_point_px[i]) << '\n';
    }
    write_text_file(a.report, csv.str());
  }
  out << "f_c " << num(result.K_c.f) << "  f_p " << num(result.K_p.f) << "  |T| "
      << num(result.rt_procam.translation.norm()) << " mm  stereo "
      << num(result.stereo_residual_px) << " px\n";
  return kExitOk;
}

// decode

struct DecodeArgs {
  std::string manifest;
  std::string corners;
  std::string out;
  int contrast_threshold = DecodeOptions{}.contrast_threshold;
  int span_threshold = DecodeOptions{}.span_threshold;
};

int cmd_decode(const DecodeArgs& a, std::ostream& out, std::ostream& err) {
  const StackManifest manifest = read_manifest(a.manifest);
  const CornersFile corners = read_corners(a.corners);
  const PatternLayout layout = make_pattern_layout(manifest.projector_width, manifest.projector_height);
  if (manifest.patterns.size() != layout.size()) {
    throw Error(ErrorKind::Schema, a.manifest + ": patterns: expected " +
                                       std::to_string(layout.size()) + " images, got " +
                                       std::to_string(manifest.patterns.size()));
  }
  std::vector<GrayImage> stack;
  stack.reserve(layout.size());
  for (const auto& p : manifest.patterns) stack.push_back(read_pgm(p));
  if (stack.front().width != corners.camera.width ||
      stack.front().height != corners.camera.height) {
    throw Error(ErrorKind::Schema, a.corners + ": camera: size differs from the pattern images");
  }
  const CorrespondenceMap map = decode(stack, layout, {a.contrast_threshold, a.span_threshold});

  CorrespondenceSet corr;
  corr.board = corners.board;
  corr.camera = corners.camera;
  corr.projector = {manifest.projector_width, manifest.projector_height};
  const std::vector<Point2> grid =
      generate_board(corners.board.rows, corners.board.cols, corners.board.spacing_mm);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::optional<Point2> lifted = try_lift_corner(map, corners.corners[i]);
    if (!lifted) {
      err << "warning: corner " << i << " has too few decoded pixels around it; dropped\n";
      corr.dropped.push_back(static_cast<int>(i));
      continue;
    }
    corr.board_points.push_back(grid[i]);
    corr.camera_distorted.push_back(corners.corners[i]);
    corr.projector_points.push_back(*lifted);
  }
  write_correspondences(a.out, {corr, std::nullopt});
  out << "decoded " << map.decodable_count() << " pixels, " << corr.size() << " of "
      << grid.size() << " corners lifted\n";
  return kExitOk;
}

// evaluate

struct EvaluateArgs {
  std::string calibration;
  std::vector<std::string> poses;
  std::string out;
  std::string csv;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.poses.size() < 2) throw UsageError("evaluate needs at least two pose files");
  const CalibrationFile calib = read_calibration(a.calibration);
  const CalibrationResult& c = calib.result;
  std::vector<CorrespondenceSet> poses;
  for (const auto& p : a.poses) poses.push_back(read_correspondences(p).correspondences);

  const TranslationPrecision tp = translation_precision(c.K_c, c.distortion, c.K_p, poses);

  const double nan = std::nan("");
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "pose_id,X,Y,Z,absT,reproj_cam,reproj_pro,reproj_stereo\n";
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const CorrespondenceSet& corr = poses[i];
    Point3 t = Point3::Constant(nan);
    for (std::size_t k = 0; k < tp.used_poses.size(); ++k) {
      if (tp.used_poses[k] == static_cast<int>(i)) t = tp.translations[k];
    }
    double cam = nan, pro = nan, stereo = nan;
    try {
      const RigidTransform rt_c =
          planar_pnp(c.K_c, corr.board_points, undistort_points(c.distortion, corr.camera_distorted))
              .pose;
      const RigidTransform rt_p = planar_pnp(c.K_p, corr.board_points, corr.projector_points).pose;
      cam = reprojection_error(c.K_c, c.distortion, rt_c, corr.board_points, corr.camera_distorted)
                .mean_px;
      pro = reprojection_error(c.K_p, std::nullopt, rt_p, corr.board_points, corr.projector_points)
                .mean_px;
      stereo = stereo_reprojection(c.K_c, c.distortion, rt_c, c.K_p, rt_p, corr);
    } catch (const Error&) {
      // Reported as nan; the pose is also listed as skipped.
    }
    const double abs_t = t.norm();
    csv << i << ',' << num(t.x()) << ',' << num(t.y()) << ',' << num(t.z()) << ',' << num(abs_t)
        << ',' << num(cam) << ',' << num(pro) << ',' << num(stereo) << '\n';
    rows.push_back({{"pose_id", i},
                    {"file", a.poses[i]},
                    {"X", json_num(t.x())},
                    {"Y", json_num(t.y())},
                    {"Z", json_num(t.z())},
                    {"absT", json_num(abs_t)},
                    {"reproj_cam", json_num(cam)},
                    {"reproj_pro", json_num(pro)},
                    {"reproj_stereo", json_num(stereo)}});
  }
  csv << "sigma," << num(tp.sigma_x) << ',' << num(tp.sigma_y) << ',' << num(tp.sigma_z) << ','
      << num(tp.sigma_abs_t) << ",,,\n";
  csv << "sigma_T," << num(tp.sigma_t) << ",,,,,,\n";

  const nlohmann::ordered_json doc{
      {"schema_version", kSchemaVersion},
      {"calibration", a.calibration},
      {"poses", rows},
      {"skipped_poses", tp.skipped_poses},
      {"sigma",
       {{"X", tp.sigma_x}, {"Y", tp.sigma_y}, {"Z", tp.sigma_z}, {"T", tp.sigma_t},
        {"absT", tp.sigma_abs_t}}}};
  const std::string text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_text_file(a.out, text);
  }
  if (!a.csv.empty()) write_text_file(a.csv, csv.str());
  if (!a.out.empty()) {
    out << "sigma_T " << num(tp.sigma_t) << " mm  sigma_|T| " << num(tp.sigma_abs_t) << " mm\n";
  }
  return kExitOk;
}

// sweep

struct SweepArgs {
  std::string config;
  std::string device;
  std::string out;
  SweepOptions options;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  SceneConfig cfg = load_scene(a.config);
  if (a.noise) cfg.noise_sigma_px = *a.noise;
  if (a.seed) cfg.rng_seed = *a.seed;
  const SweepDevice device = a.device == "camera" ? SweepDevice::Camera : SweepDevice::Projector;
  const SweepResult result = rotation_sweep(cfg, device, a.options);
  std::ostringstream csv;
  csv << "psi_deg,nu_deg,delta_f_px,reproj_mean_px,converged\n";
  for (const SweepCell& cell : result.cells) {
    csv << num(cell.psi_deg) << ',' << num(cell.nu_deg) << ',' << num(cell.delta_f_px) << ','
        << num(cell.reproj_mean_px) << ',' << (cell.converged ? 1 : 0) << '\n';
  }
  write_text_file(a.out, csv.str());
  out << "wrote " << result.cells.size() << " cells to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projector-camera calibration from planar correspondences", "procam-calib"};
  app.set_version_flag("--version", PROCAM_VERSION);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Synthesize a correspondence file");
  simulate->add_option("config", sim.config, "Scene configuration JSON (defaults if omitted)");
  simulate->add_option("-o,--out", sim.out, "Output correspondence JSON")->required();
  simulate->add_option("--noise", sim.noise, "Gaussian noise sigma in pixels");
  simulate->add_option("--seed", sim.seed, "Noise seed");
  simulate->add_option("--stack-dir", sim.stack_dir,
                       "Also write the Gray-code stack, manifest and corners here");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate camera and projector");
  calibrate->add_option("correspondences", cal.input, "Correspondence JSON")->required();
  calibrate->add_option("-o,--out", cal.out, "Output calibration JSON")->required();
  calibrate->add_option("--lm-max-iters", cal.lm_max_iters, "LM iteration limit")
      ->check(CLI::PositiveNumber);
  calibrate->add_option("--report", cal.report, "Per-point residual CSV");

  DecodeArgs dec;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a Gray-code stack at given corners");
  decode_cmd->add_option("manifest", dec.manifest, "Stack manifest JSON")->required();
  decode_cmd->add_option("corners", dec.corners, "Corners JSON")->required();
  decode_cmd->add_option("-o,--out", dec.out, "Output correspondence JSON")->required();
  decode_cmd->add_option("--contrast-threshold", dec.contrast_threshold,
                         "Minimum direct/inverse difference")
      ->check(CLI::Range(0, 255));
  decode_cmd->add_option("--span-threshold", dec.span_threshold, "Minimum white-black span")
      ->check(CLI::Range(0, 255));

  EvaluateArgs eva;
  auto* evaluate = app.add_subcommand("evaluate", "Translation precision over poses");
  evaluate->add_option("calibration", eva.calibration, "Calibration JSON")->required();
  evaluate->add_option("poses", eva.poses, "Correspondence files, one per pose");
  evaluate->add_option("-o,--out", eva.out, "Metrics JSON (stdout if omitted)");
  evaluate->add_option("--csv", eva.csv, "Per-pose CSV");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Focal-length error over board tilts");
  sweep->add_option("config", sw.config, "Scene configuration JSON (defaults if omitted)");
  sweep->add_option("--device", sw.device, "camera or projector")
      ->required()
      ->check(CLI::IsMember({"camera", "projector"}));
  sweep->add_option("-o,--out", sw.out, "Output CSV")->required();
  sweep->add_option("--psi-min", sw.options.psi.min_deg, "Lower psi bound, degrees");
  sweep->add_option("--psi-max", sw.options.psi.max_deg, "Upper psi bound, degrees");
  sweep->add_option("--nu-min", sw.options.nu.min_deg, "Lower nu bound, degrees");
  sweep->add_option("--nu-max", sw.options.nu.max_deg, "Upper nu bound, degrees");
  sweep->add_option("--step", sw.options.step_deg, "Grid step in degrees");
  sweep->add_option("--trials", sw.options.noise_trials, "Noise trials per cell");
  sweep->add_option("--threads", sw.options.threads, "Worker threads (0 = auto)");
  sweep->add_option("--noise", sw.noise, "Gaussian noise sigma in pixels");
  sweep->add_option("--seed", sw.seed, "Base seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*calibrate) return cmd_calibrate(cal, out, err);
    if (*decode_cmd) return cmd_decode(dec, out, err);
    if (*evaluate) return cmd_evaluate(eva, out);
    if (*sweep) return cmd_sweep(sw, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error";
    if (!e.stage().empty()) err << " [" << e.stage() << "]";
    err << " (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace procam
