#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "procam/correspondence.hpp"
#include "procam/distortion.hpp"
#include "procam/geometry.hpp"
#include "procam/lm.hpp"

namespace procam {

/// Camera unknowns: focal length, aspect ratio, roll about the principal
/// axis and the center of projection in board coordinates. The principal
/// point is not a parameter.
struct CameraParamSet {
  double f = 1.0;
  double alpha = 1.0;
  double phi = 0.0;  // degrees
  Point3 origin = Point3::Zero();

  Eigen::VectorXd to_vector() const;
  static CameraParamSet from_vector(const Eigen::VectorXd& x);
};

/// Projector unknowns: focal length, vertical principal coordinate, roll and
/// center of projection. Aspect ratio is 1 and u0 is half the width.
struct ProjectorParamSet {
  double f = 1.0;
  double v0 = 0.0;
  double phi = 0.0;  // degrees
  Point3 origin = Point3::Zero();

  Eigen::VectorXd to_vector() const;
  static ProjectorParamSet from_vector(const Eigen::VectorXd& x);
};

/// Maps the principal point onto the board plane: (x, y, 0).
Point3 board_principal_projection(const Homography& device_to_board,
                                  const Point2& principal_point);

struct PrincipalAxisFrame {
  RotationMatrix axis;    // columns X, Y, Z in board coordinates
  RotationMatrix device;  // axis · R_Z(phi)
};

/// Builds the device axes from the principal axis Z = target − origin with
/// Y = Z × [1 0 0]ᵀ and X = Y × Z, then rolls by `phi_deg` about Z.
/// Throws DegenerateAxis when the axis is (nearly) parallel to board x or
/// the two points coincide.
PrincipalAxisFrame principal_axis_frame(const Point3& target, const Point3& origin,
                                        double phi_deg);

/// Board→device transform for a device whose axes (in board coordinates) are
/// the columns of `device_axes` and whose center is `origin`:
/// R = Aᵀ, T = −Aᵀ·O.
RigidTransform extrinsics_from_frame(const RotationMatrix& device_axes, const Point3& origin);

/// Residual value substituted for every entry when the model cannot be
/// evaluated (degenerate axis, point behind the device).
inline constexpr double kResidualSentinel = 1e6;

/// 2N residuals observed − predicted for the camera model with the principal
/// point fixed and the principal axis pinned through `principal_on_board`.
Eigen::VectorXd camera_residuals(const CameraParamSet& theta, const Point2& principal_point,
                                 std::span<const Point2> board,
                                 std::span<const Point2> observed_undistorted,
                                 const Point3& principal_on_board);

/// 2N residuals for the projector. The principal-point footprint on the board
/// is recomputed from `projector_to_board` on every call because v0 is free.
Eigen::VectorXd projector_residuals(const ProjectorParamSet& theta, double u0,
                                    const Homography& projector_to_board,
                                    std::span<const Point2> board,
                                    std::span<const Point2> observed);

/// Starting point: f from the image diagonal, alpha 1, roll 0, v0 at half
/// the projector height and both centers at (0, 0, 2·board width).
std::pair<CameraParamSet, ProjectorParamSet> initial_values(const ImageSize& camera,
                                                           const ImageSize& projector,
                                                           double board_width_mm);

struct CalibrationConfig {
  LMConfig lm;
  /// Use this camera principal point / distortion center instead of
  /// estimating it.
  std::optional<Point2> camera_center_override;
  bool estimate_distortion = true;
  /// Quality thresholds for the degenerate-pose warnings, degrees.
  double camera_min_tilt_sum_deg = 10.0;
  double projector_min_nu_deg = 13.0;
};

struct CameraCalibration {
  Intrinsics K;
  DivisionModel distortion;
  RigidTransform extrinsics;
  CameraParamSet theta;
  Point3 principal_on_board = Point3::Zero();
  LMDiagnostics lm;
  std::optional<CenterEstimate> center_estimate;
  std::optional<DivisionCoefficients> coefficients;
  bool distortion_fallback = false;
  std::vector<std::string> warnings;
};

struct ProjectorCalibration {
  Intrinsics K;
  RigidTransform extrinsics;
  ProjectorParamSet theta;
  Point3 principal_on_board = Point3::Zero();
  LMDiagnostics lm;
  std::vector<std::string> warnings;
};

/// Distortion center → coefficients → undistortion → homography → principal
/// footprint → LM over the camera parameters. Errors carry a "camera/..."
/// stage label.
CameraCalibration calibrate_camera(const CorrespondenceSet& corr,
                                   const CalibrationConfig& config = {});

ProjectorCalibration calibrate_projector(const CorrespondenceSet& corr,
                                         const CalibrationConfig& config = {});

/// Camera→projector transform: R = R_p·R_cᵀ, T = T_p − R·T_c.
RigidTransform compose_procam_extrinsics(const RigidTransform& camera,
                                         const RigidTransform& projector);

struct ResidualSummary {
  double mean_px = 0.0;
  double rms_px = 0.0;
  double max_px = 0.0;
};

struct CalibrationResult {
  Intrinsics K_c;
  DivisionModel distortion;
  Intrinsics K_p;
  RigidTransform rt_c;
  RigidTransform rt_p;
  RigidTransform rt_procam;
  ResidualSummary camera_residual;
  ResidualSummary projector_residual;
  double stereo_residual_px = 0.0;
  int camera_iterations = 0;
  int projector_iterations = 0;
  bool camera_converged = false;
  bool projector_converged = false;
  bool distortion_fallback = false;
  std::vector<std::string> warnings;
};

CalibrationResult calibrate_procam(const CorrespondenceSet& corr,
                                   const CalibrationConfig& config = {});

/// Board tilt relative to a device that faces the board from +z:
/// XYZ Euler angles of R·R_X(180°)ᵀ.
EulerAnglesXYZ board_tilt(const RotationMatrix& board_to_device);

}  // namespace procam
