#include "procam/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <string>

#include "procam/error.hpp"

namespace procam {

double ImageSize::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

Mat3 Intrinsics::matrix() const {
  Mat3 K;
  K << f, 0.0, u0, 0.0, alpha * f, v0, 0.0, 0.0, 1.0;
  return K;
}

void Intrinsics::validate() const {
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw Error(ErrorKind::InvalidArgument, "intrinsics: focal length must be positive");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidArgument, "intrinsics: aspect ratio must be positive");
  }
}

// --- RotationMatrix -------------------------------------------------------

double RotationMatrix::orthonormality_error(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

bool RotationMatrix::is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  return orthonormality_error(m) < tol && std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix::RotationMatrix(const Mat3& m) : m_(m) {
  if (!is_rotation(m)) {
    throw Error(ErrorKind::InvalidArgument,
                "matrix is not a rotation (orthonormality error " +
                    std::to_string(orthonormality_error(m)) + ", det " +
                    std::to_string(m.determinant()) + ")");
  }
}

RotationMatrix RotationMatrix::nearest(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return RotationMatrix(U * V.transpose(), Unchecked{});
}

RotationMatrix RotationMatrix::transpose() const {
  return RotationMatrix(m_.transpose(), Unchecked{});
}

RotationMatrix RotationMatrix::operator*(const RotationMatrix& o) const {
  return RotationMatrix(m_ * o.m_, Unchecked{});
}

// --- RigidTransform -------------------------------------------------------

RigidTransform RigidTransform::inverse() const {
  RotationMatrix Rt = rotation.transpose();
  return {Rt, -(Rt * translation)};
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

Point3 RigidTransform::origin_in_source() const {
  return -(rotation.transpose() * translation);
}

// --- Homography -----------------------------------------------------------

Homography::Homography(const Mat3& m) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !m.allFinite()) {
    throw Error(ErrorKind::DegenerateConfiguration, "homography: zero or non-finite matrix");
  }
  Mat3 unit = m / norm;
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Mat3>(unit).singularValues();
  if (sv(2) <= 1e-14 * sv(0)) {
    throw Error(ErrorKind::DegenerateConfiguration, "homography: matrix is rank deficient");
  }
  if (std::abs(unit(2, 2)) < 1e-12) {
    m_ = unit;
    affine_canonical_ = false;
  } else {
    m_ = unit / unit(2, 2);
  }
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Point2 apply_homography(const Homography& H, const Point2& p) {
  const Eigen::Vector3d q = H.matrix() * p.homogeneous();
  if (std::abs(q.z()) < 1e-12) {
    throw Error(ErrorKind::PointAtInfinity, "homography maps point to infinity");
  }
  return q.hnormalized();
}

namespace {

// Hartley isotropic normalization: centroid to origin, mean distance √2.
Mat3 normalizing_transform(std::span<const Point2> pts) {
  Point2 centroid = Point2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw Error(ErrorKind::DegenerateConfiguration, "homography: coincident points");
  }
  const double s = std::numbers::sqrt2 / mean_dist;
  Mat3 T;
  T << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return T;
}

}  // namespace

Homography estimate_homography(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorKind::LengthMismatch, "homography: source/target size mismatch");
  }
  const auto n = static_cast<Eigen::Index>(src.size());
  if (n < 4) {
    throw Error(ErrorKind::DegenerateConfiguration, "homography: at least 4 pairs required");
  }
  const Mat3 Ts = normalizing_transform(src);
  const Mat3 Td = normalizing_transform(dst);

  Eigen::Matrix<double, Eigen::Dynamic, 9> A(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = Ts * src[i].homogeneous();
    const Eigen::Vector3d q = Td * dst[i].homogeneous();
    const double u = q.x() / q.z();
    const double v = q.y() / q.z();
    A.row(2 * i) << 0.0, 0.0, 0.0, -p.x(), -p.y(), -p.z(), v * p.x(), v * p.y(), v * p.z();
    A.row(2 * i + 1) << p.x(), p.y(), p.z(), 0.0, 0.0, 0.0, -u * p.x(), -u * p.y(), -u * p.z();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // With n < 5 pairs A has only 8 rows; s[7] is then the last singular value.
  if (sv.size() < 8 || sv(7) <= 1e-10 * sv(0)) {
    throw Error(ErrorKind::DegenerateConfiguration,
                "homography: design matrix rank deficient (collinear points?)");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(Td.inverse() * Hn * Ts);
}

Homography estimate_homography(std::span<const std::pair<Point2, Point2>> pairs) {
  std::vector<Point2> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    src.push_back(a);
    dst.push_back(b);
  }
  return estimate_homography(src, dst);
}

// --- Projection -----------------------------------------------------------

Point2 project_pinhole(const Intrinsics& K, const RigidTransform& rt, const Point3& M) {
  const Point3 Mc = rt.apply(M);
  if (!(Mc.z() > 1e-9)) {
    throw Error(ErrorKind::NonPositiveDepth, "point behind or on the device plane");
  }
  return {K.f * Mc.x() / Mc.z() + K.u0, K.alpha * K.f * Mc.y() / Mc.z() + K.v0};
}

// --- Angles ---------------------------------------------------------------

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

RotationMatrix rotation_about_x(double deg) {
  const double c = std::cos(deg_to_rad(deg)), s = std::sin(deg_to_rad(deg));
  Mat3 m;
  m << 1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c;
  return RotationMatrix(m);
}

RotationMatrix rotation_about_y(double deg) {
  const double c = std::cos(deg_to_rad(deg)), s = std::sin(deg_to_rad(deg));
  Mat3 m;
  m << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return RotationMatrix(m);
}

RotationMatrix rotation_about_z(double deg) {
  const double c = std::cos(deg_to_rad(deg)), s = std::sin(deg_to_rad(deg));
  Mat3 m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return RotationMatrix(m);
}

RotationMatrix euler_xyz_to_matrix(const EulerAnglesXYZ& e) {
  return rotation_about_x(e.psi) * rotation_about_y(e.nu) * rotation_about_z(e.phi);
}

EulerAnglesXYZ matrix_to_euler_xyz(const RotationMatrix& rot) {
  // R = Rx·Ry·Rz gives R(0,2) = sin(nu), R(1,2) = −sin(psi)cos(nu),
  // R(2,2) = cos(psi)cos(nu), R(0,1) = −cos(nu)sin(phi), R(0,0) = cos(nu)cos(phi).
  const Mat3& R = rot.matrix();
  const double cos_nu = std::hypot(R(1, 2), R(2, 2));
  if (cos_nu < 1e-9) {
    throw Error(ErrorKind::GimbalLock, "Euler decomposition undefined at |nu| = 90 deg");
  }
  EulerAnglesXYZ e;
  e.nu = wrap_degrees(rad_to_deg(std::atan2(R(0, 2), cos_nu)));
  e.psi = wrap_degrees(rad_to_deg(std::atan2(-R(1, 2), R(2, 2))));
  e.phi = wrap_degrees(rad_to_deg(std::atan2(-R(0, 1), R(0, 0))));
  return e;
}

}  // namespace procam
