#pragma once

#include <Eigen/Core>
#include <span>
#include <utility>
#include <vector>

namespace procam {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Image size in pixels.
struct ImageSize {
  int width = 0;
  int height = 0;

  double diagonal() const;
  Point2 center() const { return {width / 2.0, height / 2.0}; }
};

/// Pinhole intrinsics: K = [f 0 u0; 0 alpha*f v0; 0 0 1].
struct Intrinsics {
  double f = 1.0;
  double alpha = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  Mat3 matrix() const;
  /// Throws InvalidArgument unless f > 0 and alpha > 0.
  void validate() const;
};

/// Orthonormal 3x3 matrix with det +1. Construction checks the invariant.
class RotationMatrix {
 public:
  static constexpr double kTolerance = 1e-9;

  RotationMatrix() : m_(Mat3::Identity()) {}
  /// Throws InvalidArgument when `m` is not a rotation to kTolerance.
  explicit RotationMatrix(const Mat3& m);

  /// Projects an arbitrary 3x3 matrix onto the nearest rotation (SVD).
  static RotationMatrix nearest(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  RotationMatrix transpose() const;
  Point3 operator*(const Point3& p) const { return m_ * p; }
  RotationMatrix operator*(const RotationMatrix& o) const;

  /// Max-norm of RᵀR − I.
  static double orthonormality_error(const Mat3& m);
  static bool is_rotation(const Mat3& m, double tol = kTolerance);

 private:
  struct Unchecked {};
  RotationMatrix(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// Maps board (or any source) coordinates into a device frame:
/// x_dev = rotation * x + translation.
struct RigidTransform {
  RotationMatrix rotation;
  Point3 translation = Point3::Zero();

  Point3 apply(const Point3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  /// (this ∘ other)(x) = this(other(x)).
  RigidTransform compose(const RigidTransform& other) const;
  /// Center of the device expressed in the source frame: −Rᵀ·T.
  Point3 origin_in_source() const;
};

/// 3x3 planar projective map, stored in canonical form (bottom-right = 1)
/// unless that entry vanishes, in which case it is Frobenius-normalized and
/// `affine_canonical()` is false.
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}
  /// Canonicalizes `m`. Throws DegenerateConfiguration if m is rank < 3.
  explicit Homography(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  bool affine_canonical() const { return affine_canonical_; }
  Homography inverse() const;

 private:
  Mat3 m_;
  bool affine_canonical_ = true;
};

/// XYZ Euler angles in degrees: R = R_X(psi) · R_Y(nu) · R_Z(phi).
struct EulerAnglesXYZ {
  double psi = 0.0;
  double nu = 0.0;
  double phi = 0.0;
};

double deg_to_rad(double deg);
double rad_to_deg(double rad);
/// Wraps an angle in degrees into (−180, 180].
double wrap_degrees(double deg);

/// Projects M through K·(R·M + T). Throws NonPositiveDepth when the depth in
/// the device frame is ≤ 1e-9.
Point2 project_pinhole(const Intrinsics& K, const RigidTransform& rt, const Point3& M);

/// Normalized DLT fit of the homography mapping `src[i]` onto `dst[i]`.
/// Throws DegenerateConfiguration on fewer than 4 pairs, on (near-)collinear
/// source layouts, or on a rank-deficient design matrix.
Homography estimate_homography(std::span<const Point2> src, std::span<const Point2> dst);
Homography estimate_homography(std::span<const std::pair<Point2, Point2>> pairs);

/// Throws PointAtInfinity when the mapped homogeneous weight is < 1e-12.
Point2 apply_homography(const Homography& H, const Point2& p);

RotationMatrix euler_xyz_to_matrix(const EulerAnglesXYZ& e);
/// Throws GimbalLock when |cos(nu)| < 1e-9.
EulerAnglesXYZ matrix_to_euler_xyz(const RotationMatrix& R);

RotationMatrix rotation_about_x(double deg);
RotationMatrix rotation_about_y(double deg);
RotationMatrix rotation_about_z(double deg);

/// Lifts 2D board coordinates onto the z = 0 plane.
inline Point3 on_board(const Point2& p) { return {p.x(), p.y(), 0.0}; }

}  // namespace procam
