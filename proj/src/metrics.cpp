#include "procam/metrics.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <string>

#include "procam/calibrate.hpp"
#include "procam/error.hpp"

namespace procam {

ReprojectionStats reprojection_error(const Intrinsics& K,
                                     const std::optional<DivisionModel>& distortion,
                                     const RigidTransform& board_to_device,
                                     std::span<const Point2> board,
                                     std::span<const Point2> observed) {
  if (board.size() != observed.size()) {
    throw Error(ErrorKind::LengthMismatch, "reprojection: board/observation lengths differ");
  }
  ReprojectionStats s;
  if (board.empty()) return s;
  std::vector<Point2> points(observed.begin(), observed.end());
  if (distortion) points = undistort_points(*distortion, observed);
  s.per_point_px.reserve(board.size());
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < board.size(); ++i) {
    const double e = (points[i] - project_pinhole(K, board_to_device, on_board(board[i]))).norm();
    s.per_point_px.push_back(e);
    sum += e;
    sum_sq += e * e;
    s.max_px = std::max(s.max_px, e);
  }
  const double n = static_cast<double>(board.size());
  s.mean_px = sum / n;
  s.rms_px = std::sqrt(sum_sq / n);
  return s;
}

namespace {

RigidTransform pose_from(const RotationMatrix& base, const Eigen::VectorXd& x) {
  const Eigen::Vector3d w = x.head<3>();
  const double angle = w.norm();
  Mat3 delta = Mat3::Identity();
  if (angle > 0.0) delta = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
  return {RotationMatrix::nearest(base.matrix() * delta), x.tail<3>()};
}

}  // namespace

PnPResult planar_pnp(const Intrinsics& K, std::span<const Point2> board,
                     std::span<const Point2> image, const LMConfig& config) {
  if (board.size() != image.size()) {
    throw Error(ErrorKind::LengthMismatch, "pnp: board/image lengths differ");
  }
  K.validate();
  const Homography H = estimate_homography(board, image);
  const Mat3 M = K.matrix().inverse() * H.matrix();
  const double n1 = M.col(0).norm();
  if (!(n1 > 0.0)) throw Error(ErrorKind::DegenerateConfiguration, "pnp: degenerate homography");
  double lambda = 1.0 / n1;

  Point2 centroid = Point2::Zero();
  for (const auto& b : board) centroid += b;
  centroid /= static_cast<double>(board.size());
  const double depth = (M.col(0) * centroid.x() + M.col(1) * centroid.y() + M.col(2)).z();
  if (lambda * depth < 0.0) lambda = -lambda;

  const Point3 r1 = lambda * M.col(0);
  const Point3 r2 = lambda * M.col(1);
  Mat3 R0;
  R0.col(0) = r1;
  R0.col(1) = r2;
  R0.col(2) = r1.cross(r2);
  const RotationMatrix base = RotationMatrix::nearest(R0);
  const Point3 t0 = lambda * M.col(2);

  const Eigen::Index m = 2 * static_cast<Eigen::Index>(board.size());
  const ResidualFn fn = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const RigidTransform pose = pose_from(base, x);
    Eigen::VectorXd r(m);
    try {
      for (std::size_t i = 0; i < board.size(); ++i) {
        const Point2 e = image[i] - project_pinhole(K, pose, on_board(board[i]));
        r(2 * static_cast<Eigen::Index>(i)) = e.x();
        r(2 * static_cast<Eigen::Index>(i) + 1) = e.y();
      }
    } catch (const Error&) {
      r.setConstant(kResidualSentinel);
    }
    return r;
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
  x0.tail<3>() = t0;
  const LMResult fit = levenberg_marquardt(fn, x0, config);
  return {pose_from(base, fit.x), fit.diagnostics};
}

TranslationPrecision translation_precision(const Intrinsics& K_c,
                                           const std::optional<DivisionModel>& distortion,
                                           const Intrinsics& K_p,
                                           std::span<const CorrespondenceSet> poses) {
  if (poses.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "translation precision needs at least 2 poses");
  }
  TranslationPrecision out;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const CorrespondenceSet& pose = poses[i];
    try {
      std::vector<Point2> cam(pose.camera_distorted);
      if (distortion) cam = undistort_points(*distortion, pose.camera_distorted);
      const PnPResult c = planar_pnp(K_c, pose.board_points, cam);
      const PnPResult p = planar_pnp(K_p, pose.board_points, pose.projector_points);
      const RigidTransform procam = compose_procam_extrinsics(c.pose, p.pose);
      out.translations.push_back(procam.translation);
      out.magnitudes.push_back(procam.translation.norm());
      out.used_poses.push_back(static_cast<int>(i));
    } catch (const Error&) {
      out.skipped_poses.push_back(static_cast<int>(i));
    }
  }
  const std::size_t n = out.translations.size();
  if (n < 2) {
    throw Error(ErrorKind::InvalidArgument,
                "translation precision: fewer than 2 poses survived PnP (" +
                    std::to_string(out.skipped_poses.size()) + " skipped)");
  }
  // Deviations are taken about the first pose so identical poses give
  // exactly zero.
  const Point3 t0 = out.translations.front();
  const double m0 = out.magnitudes.front();
  Point3 mean = Point3::Zero();
  double mean_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += out.translations[i] - t0;
    mean_abs += out.magnitudes[i] - m0;
  }
  mean /= static_cast<double>(n);
  mean_abs /= static_cast<double>(n);
  Point3 var = Point3::Zero();
  double var_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    var += (out.translations[i] - t0 - mean).cwiseAbs2();
    const double d = out.magnitudes[i] - m0 - mean_abs;
    var_abs += d * d;
  }
  var /= static_cast<double>(n - 1);
  var_abs /= static_cast<double>(n - 1);
  out.sigma_x = std::sqrt(var.x());
  out.sigma_y = std::sqrt(var.y());
  out.sigma_z = std::sqrt(var.z());
  out.sigma_t = std::sqrt(var.sum());
  out.sigma_abs_t = std::sqrt(var_abs);
  return out;
}

std::uint64_t pose_set_count(int n_poses, int min_size) {
  if (min_size < 0 || n_poses < min_size || n_poses > 62) {
    throw Error(ErrorKind::InvalidArgument, "pose_set_count: need 0 ≤ min_size ≤ n ≤ 62");
  }
  std::uint64_t total = 0;
  std::uint64_t binom = 1;  // C(n, i), built up from C(n, 0)
  for (int i = 0; i <= n_poses; ++i) {
    if (i > 0) binom = binom * static_cast<std::uint64_t>(n_poses - i + 1) / static_cast<std::uint64_t>(i);
    if (i >= min_size) total += binom;
  }
  return total;
}

double stereo_reprojection(const Intrinsics& K_c, const std::optional<DivisionModel>& distortion,
                           const RigidTransform& rt_c, const Intrinsics& K_p,
                           const RigidTransform& rt_p, const CorrespondenceSet& corr) {
  const ReprojectionStats c =
      reprojection_error(K_c, distortion, rt_c, corr.board_points, corr.camera_distorted);
  const ReprojectionStats p =
      reprojection_error(K_p, std::nullopt, rt_p, corr.board_points, corr.projector_points);
  return 0.5 * (c.mean_px + p.mean_px);
}

}  // namespace procam
