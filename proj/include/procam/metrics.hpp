#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "procam/correspondence.hpp"
#include "procam/distortion.hpp"
#include "procam/geometry.hpp"
#include "procam/lm.hpp"

namespace procam {

struct ReprojectionStats {
  double mean_px = 0.0;
  double rms_px = 0.0;
  double max_px = 0.0;
  std::vector<double> per_point_px;
};

/// Euclidean distances between observed points and the pinhole projection of
/// the board corners. With `distortion`, observed points are undistorted
/// first so the comparison happens in undistorted pixels.
ReprojectionStats reprojection_error(const Intrinsics& K,
                                     const std::optional<DivisionModel>& distortion,
                                     const RigidTransform& board_to_device,
                                     std::span<const Point2> board,
                                     std::span<const Point2> observed);

struct PnPResult {
  RigidTransform pose;
  LMDiagnostics refinement;
};

/// Board pose from ≥ 4 undistorted image points of the planar target:
/// homography decomposition, projection onto SO(3), then LM refinement of the
/// six pose parameters. The solution keeps the board centroid in front of
/// the device.
PnPResult planar_pnp(const Intrinsics& K, std::span<const Point2> board,
                     std::span<const Point2> image, const LMConfig& config = {});

struct TranslationPrecision {
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double sigma_z = 0.0;
  double sigma_t = 0.0;
  double sigma_abs_t = 0.0;
  std::vector<Point3> translations;
  std::vector<double> magnitudes;
  std::vector<int> used_poses;
  std::vector<int> skipped_poses;
};

/// Per pose: camera and projector PnP with fixed intrinsics, composed into
/// the camera→projector translation. Reports sample (n−1) standard
/// deviations. Failed poses are skipped as long as two remain.
TranslationPrecision translation_precision(const Intrinsics& K_c,
                                           const std::optional<DivisionModel>& distortion,
                                           const Intrinsics& K_p,
                                           std::span<const CorrespondenceSet> poses);

/// Σ_{i=min_size}^{n} C(n, i).
std::uint64_t pose_set_count(int n_poses, int min_size = 3);

/// Mean of the camera and projector mean reprojection errors.
double stereo_reprojection(const Intrinsics& K_c, const std::optional<DivisionModel>& distortion,
                           const RigidTransform& rt_c, const Intrinsics& K_p,
                           const RigidTransform& rt_p, const CorrespondenceSet& corr);

}  // namespace procam
