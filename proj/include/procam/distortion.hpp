#pragma once

#include <span>
#include <vector>

#include "procam/geometry.hpp"
#include "procam/lm.hpp"

namespace procam {

/// Two-parameter division model. Distorted points p̂ map to undistorted
/// points through  p = c + (p̂ − c) / (1 + k1·r² + k2·r⁴),  r = |p̂ − c|.
struct DivisionModel {
  Point2 center = Point2::Zero();
  double k1 = 0.0;  // px⁻²
  double k2 = 0.0;  // px⁻⁴

  double denominator(double r2) const { return 1.0 + k1 * r2 + k2 * r2 * r2; }

  /// Checks 1 + k1·r² + k2·r⁴ > 0 for every r up to the image diagonal.
  /// Throws ModelSingularity otherwise.
  void validate(const ImageSize& image) const;

  /// Constructs and validates against `image`.
  static DivisionModel checked(const Point2& center, double k1, double k2,
                               const ImageSize& image);
};

/// Throws ModelSingularity when the denominator is ≤ 1e-9.
Point2 undistort_point(const DivisionModel& model, const Point2& distorted);

/// Batch form backed by the SIMD kernel table. Throws ModelSingularity if any
/// point is singular.
std::vector<Point2> undistort_points(const DivisionModel& model,
                                     std::span<const Point2> distorted);

/// Numerical inverse of undistort_point: finds the distorted radius in
/// [0, 2·diagonal] by bracketing, bisection and a Newton polish. Throws
/// NoRealRoot when no admissible radius exists.
Point2 distort_point(const DivisionModel& model, const Point2& undistorted,
                     const ImageSize& image);

struct CenterEstimate {
  /// Refined center (see estimate_center_of_distortion).
  Point2 center = Point2::Zero();
  /// Dehomogenized left epipole of the linear estimate.
  Point2 linear_center = Point2::Zero();
  /// Radial fundamental matrix relating distorted camera points (left) to
  /// board points (right): p̂ᵀ F b = 0.
  Mat3 fundamental = Mat3::Zero();
  /// Singular values of the (normalized) linear design matrix, descending.
  Eigen::Matrix<double, 9, 1> design_singular_values = Eigen::Matrix<double, 9, 1>::Zero();
  /// Transfer cost of a plain homography and of the refined division model.
  double homography_cost = 0.0;
  double refined_cost = 0.0;
  /// The division model does not explain the data significantly better than
  /// a homography, so the center is ill-determined.
  bool near_zero_distortion = false;
};

/// Recovers the center of distortion as the left epipole of the radial
/// fundamental matrix, then polishes it together with (k1, k2) on the same
/// transfer cost estimate_division_coeffs uses. Needs ≥ 9 pairs. Throws
/// RankDeficient when the design matrix has numerical rank < 8 (e.g. exactly
/// undistorted data).
CenterEstimate estimate_center_of_distortion(std::span<const Point2> distorted,
                                             std::span<const Point2> board);

struct DivisionCoefficients {
  double k1 = 0.0;
  double k2 = 0.0;
  /// Sum of squared transfer residuals at (0, 0) and at the solution.
  double initial_cost = 0.0;
  double cost = 0.0;
  LMDiagnostics diagnostics;
};

/// Fits (k1, k2) about a fixed center so that the undistorted points are
/// exactly related to the board by a homography. Each residual evaluation
/// undistorts all points, refits the board→camera homography by DLT and
/// measures the transfer error scaled back into distorted pixels.
/// Needs ≥ 8 pairs.
DivisionCoefficients estimate_division_coeffs(std::span<const Point2> distorted,
                                              std::span<const Point2> board,
                                              const Point2& center,
                                              const LMConfig& config = {});

/// Residual vector used by estimate_division_coeffs, for (k1, k2) in model
/// units. Exposed for tests.
Eigen::VectorXd division_transfer_residuals(std::span<const Point2> distorted,
                                            std::span<const Point2> board,
                                            const DivisionModel& model);

}  // namespace procam
