#include "procam/calibrate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>
#include <sstream>
#include <tuple>

#include "procam/error.hpp"
#include "procam/metrics.hpp"

namespace procam {

Eigen::VectorXd CameraParamSet::to_vector() const {
  Eigen::VectorXd x(6);
  x << f, alpha, phi, origin.x(), origin.y(), origin.z();
  return x;
}

CameraParamSet CameraParamSet::from_vector(const Eigen::VectorXd& x) {
  return {x(0), x(1), x(2), Point3(x(3), x(4), x(5))};
}

Eigen::VectorXd ProjectorParamSet::to_vector() const {
  Eigen::VectorXd x(6);
  x << f, v0, phi, origin.x(), origin.y(), origin.z();
  return x;
}

ProjectorParamSet ProjectorParamSet::from_vector(const Eigen::VectorXd& x) {
  return {x(0), x(1), x(2), Point3(x(3), x(4), x(5))};
}

Point3 board_principal_projection(const Homography& device_to_board,
                                  const Point2& principal_point) {
  return on_board(apply_homography(device_to_board, principal_point));
}

PrincipalAxisFrame principal_axis_frame(const Point3& target, const Point3& origin,
                                        double phi_deg) {
  const Point3 Z = target - origin;
  if (!(Z.norm() > 1e-6)) {
    throw Error(ErrorKind::DegenerateAxis, "principal axis: target coincides with origin");
  }
  const Point3 Y = Z.cross(Point3::UnitX());
  if (!(Y.norm() >= 1e-9 * Z.norm())) {
    throw Error(ErrorKind::DegenerateAxis, "principal axis is parallel to the board x-axis");
  }
  const Point3 X = Y.cross(Z);
  Mat3 A;
  A.col(0) = X.normalized();
  A.col(1) = Y.normalized();
  A.col(2) = Z.normalized();
  const RotationMatrix axis = RotationMatrix::nearest(A);
  return {axis, axis * rotation_about_z(phi_deg)};
}

RigidTransform extrinsics_from_frame(const RotationMatrix& device_axes, const Point3& origin) {
  const RotationMatrix R = device_axes.transpose();
  return {R, -(R * origin)};
}

namespace {

Eigen::VectorXd project_residuals(const Intrinsics& K, const RigidTransform& rt,
                                  std::span<const Point2> board,
                                  std::span<const Point2> observed) {
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(board.size()));
  for (std::size_t i = 0; i < board.size(); ++i) {
    const Point2 e = observed[i] - project_pinhole(K, rt, on_board(board[i]));
    r(2 * static_cast<Eigen::Index>(i)) = e.x();
    r(2 * static_cast<Eigen::Index>(i) + 1) = e.y();
  }
  return r;
}

void check_aligned(std::span<const Point2> board, std::span<const Point2> observed) {
  if (board.size() != observed.size()) {
    throw Error(ErrorKind::LengthMismatch, "residuals: board/observation lists differ in length");
  }
}

}  // namespace

Eigen::VectorXd camera_residuals(const CameraParamSet& theta, const Point2& principal_point,
                                 std::span<const Point2> board,
                                 std::span<const Point2> observed_undistorted,
                                 const Point3& principal_on_board) {
  check_aligned(board, observed_undistorted);
  try {
    const PrincipalAxisFrame frame = principal_axis_frame(principal_on_board, theta.origin, theta.phi);
    const Intrinsics K{theta.f, theta.alpha, principal_point.x(), principal_point.y()};
    return project_residuals(K, extrinsics_from_frame(frame.device, theta.origin), board,
                             observed_undistorted);
  } catch (const Error&) {
    return Eigen::VectorXd::Constant(2 * static_cast<Eigen::Index>(board.size()),
                                     kResidualSentinel);
  }
}

Eigen::VectorXd projector_residuals(const ProjectorParamSet& theta, double u0,
                                    const Homography& projector_to_board,
                                    std::span<const Point2> board,
                                    std::span<const Point2> observed) {
  check_aligned(board, observed);
  try {
    const Point3 target = board_principal_projection(projector_to_board, {u0, theta.v0});
    const PrincipalAxisFrame frame = principal_axis_frame(target, theta.origin, theta.phi);
    const Intrinsics K{theta.f, 1.0, u0, theta.v0};
    return project_residuals(K, extrinsics_from_frame(frame.device, theta.origin), board,
                             observed);
  } catch (const Error&) {
    return Eigen::VectorXd::Constant(2 * static_cast<Eigen::Index>(board.size()),
                                     kResidualSentinel);
  }
}

std::pair<CameraParamSet, ProjectorParamSet> initial_values(const ImageSize& camera,
                                                           const ImageSize& projector,
                                                           double board_width_mm) {
  if (camera.width <= 0 || camera.height <= 0 || projector.width <= 0 ||
      projector.height <= 0 || !(board_width_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "initial values: dimensions must be positive");
  }
  const Point3 origin(0.0, 0.0, 2.0 * board_width_mm);
  CameraParamSet cam{camera.diagonal(), 1.0, 0.0, origin};
  ProjectorParamSet proj{projector.diagonal(), projector.height / 2.0, 0.0, origin};
  return {cam, proj};
}

EulerAnglesXYZ board_tilt(const RotationMatrix& board_to_device) {
  return matrix_to_euler_xyz(board_to_device * rotation_about_x(180.0).transpose());
}

namespace {

// Rough board→device pose from the board→image homography and a pinhole
// guess. The board is taken to lie in front of the device.
RigidTransform rough_pose(const Homography& board_to_image, const Intrinsics& guess) {
  const Mat3 M = guess.matrix().inverse() * board_to_image.matrix();
  double lambda = 2.0 / (M.col(0).norm() + M.col(1).norm());
  if (M(2, 2) * lambda < 0.0) lambda = -lambda;
  Mat3 R;
  R.col(0) = lambda * M.col(0);
  R.col(1) = lambda * M.col(1);
  R.col(2) = R.col(0).cross(R.col(1));
  return {RotationMatrix::nearest(R), lambda * M.col(2)};
}

// Device center and roll about the principal axis implied by a rough pose.
std::pair<Point3, double> pose_start(const RigidTransform& pose, const Point3& target) {
  const Point3 origin = pose.origin_in_source();
  const PrincipalAxisFrame frame = principal_axis_frame(target, origin, 0.0);
  const Mat3 roll = frame.axis.matrix().transpose() * pose.rotation.transpose().matrix();
  return {origin, rad_to_deg(std::atan2(roll(1, 0), roll(0, 0)))};
}

std::string format_angles(const EulerAnglesXYZ& e) {
  std::ostringstream os;
  os.precision(3);
  os << "psi=" << e.psi << " nu=" << e.nu;
  return os.str();
}

// Runs LM from each start and keeps the lowest final cost. The first start
// wins ties.
LMResult best_of_starts(const ResidualFn& fn, const std::vector<Eigen::VectorXd>& starts,
                        const LMConfig& config) {
  std::optional<LMResult> best;
  std::optional<Error> first_error;
  for (const Eigen::VectorXd& x0 : starts) {
    try {
      LMResult fit = levenberg_marquardt(fn, x0, config);
      if (!best || fit.diagnostics.final_cost < best->diagnostics.final_cost) best = std::move(fit);
    } catch (const Error& e) {
      if (!first_error) first_error = e;
    }
  }
  if (!best) throw *first_error;
  return *best;
}

Point2 board_center(std::span<const Point2> board) {
  Point2 lo = board.front(), hi = board.front();
  for (const Point2& p : board) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (lo + hi) / 2.0;
}

template <typename Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  }
}

}  // namespace

CameraCalibration calibrate_camera(const CorrespondenceSet& corr,
                                   const CalibrationConfig& config) {
  return staged("camera", [&] {
    corr.validate();
    if (corr.size() < 9) {
      throw Error(ErrorKind::InvalidArgument,
                  "camera calibration needs at least 9 correspondences for the distortion stage");
    }
    CameraCalibration out;
    const std::span<const Point2> board(corr.board_points);
    const std::span<const Point2> distorted(corr.camera_distorted);

    Point2 center = corr.camera.center();
    bool fallback = !config.estimate_distortion;
    if (config.camera_center_override) {
      center = *config.camera_center_override;
    } else if (config.estimate_distortion) {
      try {
        CenterEstimate est = estimate_center_of_distortion(distorted, board);
        out.center_estimate = est;
        if (est.near_zero_distortion) {
          fallback = true;
        } else {
          center = est.center;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw e.with_stage("distortion-center");
        fallback = true;
      }
      if (fallback) {
        out.warnings.push_back(
            "no measurable radial distortion; using the image center as principal point and "
            "k1 = k2 = 0");
      }
    }

    DivisionModel model{center, 0.0, 0.0};
    if (!fallback) {
      DivisionCoefficients coeffs = staged("distortion-coefficients", [&] {
        return estimate_division_coeffs(distorted, board, center, config.lm);
      });
      model.k1 = coeffs.k1;
      model.k2 = coeffs.k2;
      if (!coeffs.diagnostics.converged()) {
        out.warnings.push_back("distortion coefficient fit did not converge");
      }
      out.coefficients = coeffs;
    }
    out.distortion_fallback = fallback;
    out.distortion = model;

    const std::vector<Point2> undistorted =
        staged("undistort", [&] { return undistort_points(model, distorted); });
    const Homography cam_to_board =
        staged("homography", [&] { return estimate_homography(undistorted, board); });
    out.principal_on_board =
        staged("principal-projection", [&] { return board_principal_projection(cam_to_board, center); });

    CameraParamSet theta0 =
        initial_values(corr.camera, corr.projector, corr.board.width_mm()).first;
    const RigidTransform rough =
        rough_pose(cam_to_board.inverse(), {theta0.f, 1.0, center.x(), center.y()});
    if (rough.origin_in_source().z() < 0.0) theta0.origin.z() = -theta0.origin.z();

    const Point3 footprint = out.principal_on_board;
    const ResidualFn fn = [&](const Eigen::VectorXd& x) {
      return camera_residuals(CameraParamSet::from_vector(x), center, board, undistorted, footprint);
    };
    std::vector<Eigen::VectorXd> starts{theta0.to_vector()};
    CameraParamSet centered = theta0;
    centered.origin.head<2>() = board_center(board);
    starts.push_back(centered.to_vector());
    try {
      CameraParamSet posed = theta0;
      std::tie(posed.origin, posed.phi) = pose_start(rough, footprint);
      starts.push_back(posed.to_vector());
    } catch (const Error&) {
      // Degenerate rough pose; the other starts remain.
    }
    const LMResult fit =
        staged("optimize", [&] { return best_of_starts(fn, starts, config.lm); });
    out.lm = fit.diagnostics;
    out.theta = CameraParamSet::from_vector(fit.x);
    if (!out.lm.converged()) out.warnings.push_back("camera optimization hit the iteration limit");

    out.K = {out.theta.f, out.theta.alpha, center.x(), center.y()};
    const PrincipalAxisFrame frame = staged("extrinsics", [&] {
      return principal_axis_frame(footprint, out.theta.origin, out.theta.phi);
    });
    out.extrinsics = extrinsics_from_frame(frame.device, out.theta.origin);

    try {
      const EulerAnglesXYZ tilt = board_tilt(out.extrinsics.rotation);
      if (std::abs(tilt.psi) + std::abs(tilt.nu) < config.camera_min_tilt_sum_deg) {
        out.warnings.push_back("near-frontal camera pose (" + format_angles(tilt) +
                               "); focal length is poorly constrained");
      }
    } catch (const Error&) {
      // Tilt at gimbal lock is far from frontal.
    }
    return out;
  });
}

ProjectorCalibration calibrate_projector(const CorrespondenceSet& corr,
                                         const CalibrationConfig& config) {
  return staged("projector", [&] {
    corr.validate();
    if (corr.size() < 4) {
      throw Error(ErrorKind::InvalidArgument, "projector calibration needs at least 4 points");
    }
    ProjectorCalibration out;
    const std::span<const Point2> board(corr.board_points);
    const std::span<const Point2> observed(corr.projector_points);
    const double u0 = corr.projector.width / 2.0;

    const Homography proj_to_board =
        staged("homography", [&] { return estimate_homography(observed, board); });

    ProjectorParamSet theta0 =
        initial_values(corr.camera, corr.projector, corr.board.width_mm()).second;
    const Homography board_to_proj = proj_to_board.inverse();
    if (rough_pose(board_to_proj, {theta0.f, 1.0, u0, theta0.v0}).origin_in_source().z() < 0.0) {
      theta0.origin.z() = -theta0.origin.z();
    }

    const ResidualFn fn = [&](const Eigen::VectorXd& x) {
      return projector_residuals(ProjectorParamSet::from_vector(x), u0, proj_to_board, board,
                                 observed);
    };
    // The principal point of a projector usually sits near the top or bottom
    // edge, so both edges are tried besides the mid-height start.
    std::vector<Eigen::VectorXd> starts;
    for (const double v0 : {theta0.v0, 0.0, static_cast<double>(corr.projector.height)}) {
      ProjectorParamSet s = theta0;
      s.v0 = v0;
      starts.push_back(s.to_vector());
      s.origin.head<2>() = board_center(board);
      starts.push_back(s.to_vector());
      try {
        const RigidTransform rough = rough_pose(board_to_proj, {theta0.f, 1.0, u0, v0});
        std::tie(s.origin, s.phi) =
            pose_start(rough, board_principal_projection(proj_to_board, {u0, v0}));
        starts.push_back(s.to_vector());
      } catch (const Error&) {
      }
    }
    const LMResult fit =
        staged("optimize", [&] { return best_of_starts(fn, starts, config.lm); });
    out.lm = fit.diagnostics;
    out.theta = ProjectorParamSet::from_vector(fit.x);
    if (!out.lm.converged()) {
      out.warnings.push_back("projector optimization hit the iteration limit");
    }

    out.K = {out.theta.f, 1.0, u0, out.theta.v0};
    out.principal_on_board = staged("principal-projection", [&] {
      return board_principal_projection(proj_to_board, {u0, out.theta.v0});
    });
    const PrincipalAxisFrame frame = staged("extrinsics", [&] {
      return principal_axis_frame(out.principal_on_board, out.theta.origin, out.theta.phi);
    });
    out.extrinsics = extrinsics_from_frame(frame.device, out.theta.origin);

    try {
      const EulerAnglesXYZ tilt = board_tilt(out.extrinsics.rotation);
      if (std::abs(tilt.nu) < config.projector_min_nu_deg) {
        out.warnings.push_back("projector pose has small rotation about its y-axis (" +
                               format_angles(tilt) + "); focal length is poorly constrained");
      }
    } catch (const Error&) {
    }
    return out;
  });
}

RigidTransform compose_procam_extrinsics(const RigidTransform& camera,
                                         const RigidTransform& projector) {
  const RotationMatrix R = projector.rotation * camera.rotation.transpose();
  return {R, projector.translation - R * camera.translation};
}

CalibrationResult calibrate_procam(const CorrespondenceSet& corr,
                                   const CalibrationConfig& config) {
  const CameraCalibration cam = calibrate_camera(corr, config);
  const ProjectorCalibration proj = calibrate_projector(corr, config);

  CalibrationResult out;
  out.K_c = cam.K;
  out.distortion = cam.distortion;
  out.K_p = proj.K;
  out.rt_c = cam.extrinsics;
  out.rt_p = proj.extrinsics;
  out.rt_procam = compose_procam_extrinsics(cam.extrinsics, proj.extrinsics);
  out.camera_iterations = cam.lm.iterations;
  out.projector_iterations = proj.lm.iterations;
  out.camera_converged = cam.lm.converged();
  out.projector_converged = proj.lm.converged();
  out.distortion_fallback = cam.distortion_fallback;
  for (const auto& w : cam.warnings) out.warnings.push_back("camera: " + w);
  for (const auto& w : proj.warnings) out.warnings.push_back("projector: " + w);

  const ReprojectionStats cs = reprojection_error(out.K_c, out.distortion, out.rt_c,
                                                  corr.board_points, corr.camera_distorted);
  const ReprojectionStats ps = reprojection_error(out.K_p, std::nullopt, out.rt_p,
                                                  corr.board_points, corr.projector_points);
  out.camera_residual = {cs.mean_px, cs.rms_px, cs.max_px};
  out.projector_residual = {ps.mean_px, ps.rms_px, ps.max_px};
  out.stereo_residual_px = 0.5 * (cs.mean_px + ps.mean_px);
  return out;
}

}  // namespace procam
