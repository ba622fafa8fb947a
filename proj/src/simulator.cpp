#include "procam/simulator.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include <Eigen/LU>

#include "procam/calibrate.hpp"
#include "procam/error.hpp"
#include "procam/metrics.hpp"
#include "procam/rng.hpp"

namespace procam {

void SceneConfig::validate() const {
  if (board.rows < 2 || board.cols < 2 || !(board.spacing_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "scene: board needs ≥ 2×2 corners and spacing > 0");
  }
  if (!(noise_sigma_px >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "scene: noise sigma must be ≥ 0");
  }
  if (camera_size.width <= 0 || camera_size.height <= 0 || projector_size.width <= 0 ||
      projector_size.height <= 0) {
    throw Error(ErrorKind::InvalidArgument, "scene: image sizes must be positive");
  }
  if (!(camera_pose.distance_mm > 0.0) || !(projector_pose.distance_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "scene: device distances must be positive");
  }
  camera.validate();
  projector.validate();
  camera_distortion.validate(camera_size);
}

RigidTransform device_transform(const DevicePose& pose, const Intrinsics& K,
                                const ImageSize& image, const BoardSpec& board) {
  const RotationMatrix R = euler_xyz_to_matrix(pose.tilt) * rotation_about_x(180.0);
  const Point2 c = image.center();
  const Point3 ray = Point3((c.x() - K.u0) / K.f, (c.y() - K.v0) / (K.alpha * K.f), 1.0).normalized();
  const Point3 board_center((board.cols - 1) * board.spacing_mm / 2.0,
                            (board.rows - 1) * board.spacing_mm / 2.0, 0.0);
  return {R, pose.distance_mm * ray - R * board_center};
}

namespace {

bool inside(const Point2& p, const ImageSize& s) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < s.width && p.y() < s.height;
}

}  // namespace

Observation synthesize_observations(const SceneConfig& cfg, const RigidTransform& rt_c,
                                    const RigidTransform& rt_p) {
  cfg.validate();
  Observation obs;
  obs.truth = {cfg.camera,  cfg.camera_distortion, cfg.projector,
               rt_c,        rt_p,                  compose_procam_extrinsics(rt_c, rt_p)};

  CorrespondenceSet& corr = obs.correspondences;
  corr.board = cfg.board;
  corr.camera = cfg.camera_size;
  corr.projector = cfg.projector_size;
  corr.board_points = generate_board(cfg.board.rows, cfg.board.cols, cfg.board.spacing_mm);

  std::string offenders;
  for (std::size_t i = 0; i < corr.board_points.size(); ++i) {
    const Point3 M = on_board(corr.board_points[i]);
    Point2 cam, proj;
    try {
      cam = distort_point(cfg.camera_distortion, project_pinhole(cfg.camera, rt_c, M),
                          cfg.camera_size);
      proj = project_pinhole(cfg.projector, rt_p, M);
    } catch (const Error&) {
      cam = proj = Point2::Constant(-1.0);
    }
    if (!inside(cam, cfg.camera_size) || !inside(proj, cfg.projector_size)) {
      offenders += (offenders.empty() ? "" : ",") + std::to_string(i);
    }
    corr.camera_distorted.push_back(cam);
    corr.projector_points.push_back(proj);
  }
  if (!offenders.empty()) {
    throw Error(ErrorKind::OutOfFrame, "corners outside the image: " + offenders);
  }

  if (cfg.noise_sigma_px > 0.0) {
    Xoshiro256 rng(cfg.rng_seed);
    for (auto& p : corr.camera_distorted) {
      p.x() += cfg.noise_sigma_px * rng.normal();
      p.y() += cfg.noise_sigma_px * rng.normal();
    }
    for (auto& p : corr.projector_points) {
      p.x() += cfg.noise_sigma_px * rng.normal();
      p.y() += cfg.noise_sigma_px * rng.normal();
    }
  }
  return obs;
}

Observation synthesize_observations(const SceneConfig& cfg) {
  const RigidTransform rt_c =
      device_transform(cfg.camera_pose, cfg.camera, cfg.camera_size, cfg.board);
  const RigidTransform rt_p =
      device_transform(cfg.projector_pose, cfg.projector, cfg.projector_size, cfg.board);
  return synthesize_observations(cfg, rt_c, rt_p);
}

std::vector<Observation> synthesize_rig_sequence(const SceneConfig& cfg,
                                                 const RigidTransform& rig,
                                                 std::span<const EulerAnglesXYZ> camera_tilts) {
  std::vector<Observation> out;
  out.reserve(camera_tilts.size());
  for (std::size_t i = 0; i < camera_tilts.size(); ++i) {
    SceneConfig pose_cfg = cfg;
    pose_cfg.rng_seed = cfg.rng_seed + i;
    pose_cfg.camera_pose.tilt = camera_tilts[i];
    const RigidTransform rt_c =
        device_transform(pose_cfg.camera_pose, cfg.camera, cfg.camera_size, cfg.board);
    out.push_back(synthesize_observations(pose_cfg, rt_c, rig.compose(rt_c)));
  }
  return out;
}

std::vector<GrayImage> render_graycode_stack(const PatternLayout& layout,
                                             const ImageSize& camera_size,
                                             const PixelMapping& mapping,
                                             const StackRenderOptions& options) {
  const std::size_t n =
      static_cast<std::size_t>(camera_size.width) * static_cast<std::size_t>(camera_size.height);
  constexpr int kUnlit = -1;
  std::vector<int> column(n, kUnlit), row(n, kUnlit);
  for (int y = 0; y < camera_size.height; ++y) {
    for (int x = 0; x < camera_size.width; ++x) {
      const std::optional<Point2> p = mapping(Point2(x, y));
      if (!p || !p->allFinite()) continue;
      const double c = std::floor(p->x() + 0.5);
      const double r = std::floor(p->y() + 0.5);
      if (c < 0 || r < 0 || c >= layout.projector_width || r >= layout.projector_height) continue;
      const std::size_t i = static_cast<std::size_t>(y) * camera_size.width + x;
      column[i] = static_cast<int>(c);
      row[i] = static_cast<int>(r);
    }
  }

  std::vector<GrayImage> stack;
  stack.reserve(layout.size());
  for (const PatternFrame& frame : layout.frames) {
    GrayImage img(camera_size.width, camera_size.height, options.black_level);
    for (std::size_t i = 0; i < n; ++i) {
      if (column[i] == kUnlit) continue;
      img.data[i] = pattern_value(frame, column[i], row[i]) != 0 ? options.white_level
                                                                : options.black_level;
    }
    stack.push_back(std::move(img));
  }
  return stack;
}

GraycodeScene synthesize_graycode_stack(const SceneConfig& cfg,
                                        const StackRenderOptions& options) {
  cfg.validate();
  const RigidTransform rt_c =
      device_transform(cfg.camera_pose, cfg.camera, cfg.camera_size, cfg.board);
  const RigidTransform rt_p =
      device_transform(cfg.projector_pose, cfg.projector, cfg.projector_size, cfg.board);

  // Undistorted camera pixel → board plane.
  Mat3 board_to_camera;
  const Mat3& R = rt_c.rotation.matrix();
  board_to_camera.col(0) = R.col(0);
  board_to_camera.col(1) = R.col(1);
  board_to_camera.col(2) = rt_c.translation;
  const Homography camera_to_board(board_to_camera.inverse() * cfg.camera.matrix().inverse());

  GraycodeScene scene;
  scene.layout = make_pattern_layout(cfg.projector_size.width, cfg.projector_size.height);
  scene.camera_to_projector = [=](const Point2& pixel) -> std::optional<Point2> {
    try {
      const Point2 undistorted = undistort_point(cfg.camera_distortion, pixel);
      const Point2 board = apply_homography(camera_to_board, undistorted);
      // Rays that meet the plane behind the camera see nothing.
      if (rt_c.apply(on_board(board)).z() <= 0.0) return std::nullopt;
      return project_pinhole(cfg.projector, rt_p, on_board(board));
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  scene.stack = render_graycode_stack(scene.layout, cfg.camera_size, scene.camera_to_projector,
                                      options);
  return scene;
}

int sweep_thread_count(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("PROCAM_CALIB_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

namespace {

std::vector<double> grid_values(const AngleRange& range, double step) {
  std::vector<double> v;
  const int count = static_cast<int>(std::floor((range.max_deg - range.min_deg) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) v.push_back(range.min_deg + i * step);
  return v;
}

void check_range(const AngleRange& r, const char* name) {
  const bool ok = std::isfinite(r.min_deg) && std::isfinite(r.max_deg) && r.min_deg > -60.0 &&
                  r.max_deg < 60.0 && r.min_deg <= r.max_deg;
  if (!ok) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("sweep: ") + name + " range must satisfy -60 < min <= max < 60");
  }
}

struct TrialOutcome {
  double delta_f = 0.0;
  double reproj = 0.0;
  bool converged = false;
};

TrialOutcome run_trial(const SceneConfig& cfg, SweepDevice device) {
  const Observation obs = synthesize_observations(cfg);
  const CorrespondenceSet& corr = obs.correspondences;
  TrialOutcome t;
  if (device == SweepDevice::Camera) {
    CalibrationConfig cc;
    cc.camera_center_override = Point2(cfg.camera.u0 + cfg.principal_point_offset_px,
                                       cfg.camera.v0 + cfg.principal_point_offset_px);
    const CameraCalibration cal = calibrate_camera(corr, cc);
    t.delta_f = std::abs(cal.K.f - cfg.camera.f);
    t.reproj = reprojection_error(cal.K, cal.distortion, cal.extrinsics, corr.board_points,
                                  corr.camera_distorted)
                   .mean_px;
    t.converged = cal.lm.converged();
  } else {
    const ProjectorCalibration cal = calibrate_projector(corr, {});
    t.delta_f = std::abs(cal.K.f - cfg.projector.f);
    t.reproj = reprojection_error(cal.K, std::nullopt, cal.extrinsics, corr.board_points,
                                  corr.projector_points)
                   .mean_px;
    t.converged = cal.lm.converged();
  }
  return t;
}

}  // namespace

SweepResult rotation_sweep(const SceneConfig& base, SweepDevice device,
                           const SweepOptions& options) {
  check_range(options.psi, "psi");
  check_range(options.nu, "nu");
  if (!(options.step_deg > 0.0) || options.noise_trials < 1) {
    throw Error(ErrorKind::InvalidArgument, "sweep: step must be > 0 and trials ≥ 1");
  }
  base.validate();

  SweepResult result;
  result.device = device;
  result.psi_values = grid_values(options.psi, options.step_deg);
  result.nu_values = grid_values(options.nu, options.step_deg);
  const std::size_t cell_count = result.psi_values.size() * result.nu_values.size();
  result.cells.resize(cell_count);

  auto run_cell = [&](std::size_t index) {
    SweepCell& cell = result.cells[index];
    cell.psi_deg = result.psi_values[index / result.nu_values.size()];
    cell.nu_deg = result.nu_values[index % result.nu_values.size()];
    cell.trials = options.noise_trials;
    double sum_df = 0.0, sum_rep = 0.0;
    int ok = 0;
    bool all_converged = true;
    for (int trial = 0; trial < options.noise_trials; ++trial) {
      SceneConfig cfg = base;
      DevicePose& pose = device == SweepDevice::Camera ? cfg.camera_pose : cfg.projector_pose;
      pose.tilt.psi = cell.psi_deg;
      pose.tilt.nu = cell.nu_deg;
      cfg.rng_seed = base.rng_seed + 1000003ULL * index + static_cast<std::uint64_t>(trial);
      try {
        const TrialOutcome t = run_trial(cfg, device);
        sum_df += t.delta_f;
        sum_rep += t.reproj;
        all_converged = all_converged && t.converged;
        ++ok;
      } catch (const Error&) {
        ++cell.failures;
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.delta_f_px = ok > 0 ? sum_df / ok : nan;
    cell.reproj_mean_px = ok > 0 ? sum_rep / ok : nan;
    cell.converged = ok > 0 && all_converged && cell.failures == 0;
  };

  const int workers = std::min<int>(sweep_thread_count(options.threads),
                                    static_cast<int>(cell_count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cell_count; ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cell_count; i = next++) run_cell(i);
      });
    }
  }
  return result;
}

}  // namespace procam
