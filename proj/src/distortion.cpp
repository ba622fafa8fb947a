#include "procam/distortion.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "procam/error.hpp"
#include "procam/kernels.hpp"

namespace procam {

namespace {

constexpr double kMinDenominator = 1e-9;
// Design-matrix rank test for the radial fundamental matrix.
constexpr double kRankTolerance = 1e-9;
// F statistic of the distortion fit against a plain homography below which
// the distortion is treated as absent.
constexpr double kDistortionSignificance = 10.0;
constexpr double kSentinelResidual = 1e6;

Mat3 hartley_transform(std::span<const Point2> pts) {
  Point2 centroid = Point2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) {
    throw Error(ErrorKind::RankDeficient, "center of distortion: coincident points");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3 T;
  T << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return T;
}

}  // namespace

void DivisionModel::validate(const ImageSize& image) const {
  // 1 + k1·s + k2·s² over s = r² ∈ [0, diag²]: check endpoints and vertex.
  const double s_max = image.diagonal() * image.diagonal();
  double worst = std::min(1.0, denominator(s_max));
  if (k2 > 0.0) {
    const double vertex = -k1 / (2.0 * k2);
    if (vertex > 0.0 && vertex < s_max) worst = std::min(worst, denominator(vertex));
  }
  if (!(worst > kMinDenominator) || !std::isfinite(k1) || !std::isfinite(k2)) {
    throw Error(ErrorKind::ModelSingularity,
                "division model denominator vanishes inside the image (min " +
                    std::to_string(worst) + ")");
  }
}

DivisionModel DivisionModel::checked(const Point2& center, double k1, double k2,
                                     const ImageSize& image) {
  DivisionModel m{center, k1, k2};
  m.validate(image);
  return m;
}

Point2 undistort_point(const DivisionModel& model, const Point2& distorted) {
  const Point2 d = distorted - model.center;
  const double denom = model.denominator(d.squaredNorm());
  if (!(denom > kMinDenominator)) {
    throw Error(ErrorKind::ModelSingularity, "division model denominator is not positive");
  }
  // Same evaluation order as the batch kernels.
  const double w = 1.0 / denom - 1.0;
  return {distorted.x() + d.x() * w, distorted.y() + d.y() * w};
}

std::vector<Point2> undistort_points(const DivisionModel& model,
                                     std::span<const Point2> distorted) {
  const std::size_t n = distorted.size();
  std::vector<double> u(n), v(n), ou(n), ov(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = distorted[i].x();
    v[i] = distorted[i].y();
  }
  const std::size_t singular = kernels::active_kernels().undistort_points(
      u.data(), v.data(), n, model.center.x(), model.center.y(), model.k1, model.k2,
      ou.data(), ov.data());
  if (singular != 0) {
    throw Error(ErrorKind::ModelSingularity,
                std::to_string(singular) + " point(s) hit a non-positive denominator");
  }
  std::vector<Point2> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {ou[i], ov[i]};
  return out;
}

Point2 distort_point(const DivisionModel& model, const Point2& undistorted,
                     const ImageSize& image) {
  const Point2 offset = undistorted - model.center;
  const double ru = offset.norm();
  if (ru == 0.0) return model.center;

  // Root of g(rd) = rd − ru·(1 + k1·rd² + k2·rd⁴); any root has a positive
  // denominator because rd = ru·denominator > 0.
  auto g = [&](double rd) { return rd - ru * model.denominator(rd * rd); };
  const double r_max = 2.0 * image.diagonal();
  constexpr int kScanSteps = 512;
  double lo = 0.0, hi = -1.0;
  for (int i = 1; i <= kScanSteps; ++i) {
    const double r = r_max * i / kScanSteps;
    if (g(r) >= 0.0) {
      lo = r_max * (i - 1) / kScanSteps;
      hi = r;
      break;
    }
  }
  if (hi < 0.0) {
    throw Error(ErrorKind::NoRealRoot, "no distorted radius within twice the image diagonal");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? hi : lo) = mid;
  }
  double rd = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double dg = 1.0 - ru * (2.0 * model.k1 * rd + 4.0 * model.k2 * rd * rd * rd);
    if (dg == 0.0) break;
    const double next = rd - g(rd) / dg;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    rd = next;
  }
  return model.center + offset * (rd / ru);
}

namespace {

Mat3 homography_from(const Eigen::VectorXd& x, Eigen::Index offset) {
  Mat3 H;
  H << x(offset), x(offset + 1), x(offset + 2), x(offset + 3), x(offset + 4), x(offset + 5),
      x(offset + 6), x(offset + 7), 1.0;
  return H;
}

// Predicted distorted point minus observed one, for board→undistorted
// homography H and model. Exact when the undistorted point equals H·board.
Eigen::VectorXd image_residuals(std::span<const Point2> distorted, std::span<const Point2> board,
                                const DivisionModel& model, const Mat3& H) {
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(board.size()));
  for (std::size_t i = 0; i < board.size(); ++i) {
    const Eigen::Vector3d h = H * board[i].homogeneous();
    if (std::abs(h.z()) < 1e-12) throw Error(ErrorKind::PointAtInfinity, "board point at infinity");
    const double d = model.denominator((distorted[i] - model.center).squaredNorm());
    const Point2 e = model.center + d * (h.hnormalized() - model.center) - distorted[i];
    r(2 * static_cast<Eigen::Index>(i)) = e.x();
    r(2 * static_cast<Eigen::Index>(i) + 1) = e.y();
  }
  return r;
}

Eigen::VectorXd homography_params(std::span<const Point2> from, std::span<const Point2> to) {
  const Mat3& H = estimate_homography(from, to).matrix();
  Eigen::VectorXd h(8);
  h << H(0, 0), H(0, 1), H(0, 2), H(1, 0), H(1, 1), H(1, 2), H(2, 0), H(2, 1);
  return h;
}

// Joint refinement of the center, both coefficients and the board homography
// on the image-space error, started from the linear epipole and from the
// centroid of the points.
void refine_center(std::span<const Point2> distorted, std::span<const Point2> board,
                   CenterEstimate& out) {
  Point2 centroid = Point2::Zero();
  for (const auto& p : distorted) centroid += p;
  centroid /= static_cast<double>(distorted.size());

  double scale = 1.0;
  for (const auto& p : distorted) scale = std::max(scale, (p - centroid).norm());
  const double s2 = scale * scale;
  const Eigen::Index m = 2 * static_cast<Eigen::Index>(distorted.size());
  const auto guarded = [m](auto&& eval) -> Eigen::VectorXd {
    try {
      return eval();
    } catch (const Error&) {
      return Eigen::VectorXd::Constant(m, kSentinelResidual);
    }
  };

  const Eigen::VectorXd h0 = homography_params(board, distorted);
  const ResidualFn plain = [&](const Eigen::VectorXd& x) {
    return guarded([&] {
      return image_residuals(distorted, board, DivisionModel{centroid, 0.0, 0.0},
                             homography_from(x, 0));
    });
  };
  out.homography_cost = levenberg_marquardt(plain, h0).diagnostics.final_cost;

  const ResidualFn full = [&](const Eigen::VectorXd& x) {
    return guarded([&] {
      const DivisionModel model{Point2(x(0), x(1)), x(2) / s2, x(3) / (s2 * s2)};
      return image_residuals(distorted, board, model, homography_from(x, 4));
    });
  };
  out.center = out.linear_center;
  out.refined_cost = out.homography_cost;
  for (const Point2& start : {out.linear_center, centroid}) {
    Eigen::VectorXd x0(12);
    x0 << start.x(), start.y(), 0.0, 0.0, h0;
    const LMResult fit = levenberg_marquardt(full, x0);
    if (fit.diagnostics.final_cost < out.refined_cost) {
      out.refined_cost = fit.diagnostics.final_cost;
      out.center = Point2(fit.x(0), fit.x(1));
    }
  }

  const double dof = static_cast<double>(m) - 12.0;
  const double gain = out.homography_cost - out.refined_cost;
  if (out.homography_cost <= 1e-20 * static_cast<double>(m)) {
    out.near_zero_distortion = true;
  } else if (out.refined_cost <= 0.0 || dof <= 0.0) {
    out.near_zero_distortion = gain <= 0.0;
  } else {
    out.near_zero_distortion = (gain / 4.0) / (out.refined_cost / dof) < kDistortionSignificance;
  }
}

}  // namespace

CenterEstimate estimate_center_of_distortion(std::span<const Point2> distorted,
                                             std::span<const Point2> board) {
  if (distorted.size() != board.size()) {
    throw Error(ErrorKind::LengthMismatch, "center of distortion: list sizes differ");
  }
  const auto n = static_cast<Eigen::Index>(distorted.size());
  if (n < 9) {
    throw Error(ErrorKind::RankDeficient, "center of distortion: at least 9 pairs required");
  }
  const Mat3 Tc = hartley_transform(distorted);
  const Mat3 Tb = hartley_transform(board);

  Eigen::Matrix<double, Eigen::Dynamic, 9> A(n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d c = Tc * distorted[i].homogeneous();
    const Eigen::Vector3d b = Tb * board[i].homogeneous();
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) A(i, 3 * r + k) = c(r) * b(k);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  CenterEstimate out;
  out.design_singular_values = svd.singularValues();
  const auto& sv = out.design_singular_values;
  if (sv(7) <= kRankTolerance * sv(0)) {
    throw Error(ErrorKind::RankDeficient,
                "center of distortion: design matrix rank < 8 (no measurable distortion)");
  }

  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Mat3 Fn;
  Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Eigen::JacobiSVD<Mat3> fsvd(Fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = fsvd.singularValues();
  s(2) = 0.0;
  Fn = fsvd.matrixU() * s.asDiagonal() * fsvd.matrixV().transpose();
  out.fundamental = Tc.transpose() * Fn * Tb;

  // Left epipole: e_nᵀ·Fn = 0, then undo the camera normalization.
  const Eigen::Vector3d en = fsvd.matrixU().col(2);
  const Eigen::Vector3d e = Tc.inverse() * en;
  if (std::abs(e.z()) < 1e-12 * e.norm()) {
    throw Error(ErrorKind::RankDeficient, "center of distortion: epipole at infinity");
  }
  out.linear_center = e.hnormalized();
  refine_center(distorted, board, out);
  return out;
}

Eigen::VectorXd division_transfer_residuals(std::span<const Point2> distorted,
                                            std::span<const Point2> board,
                                            const DivisionModel& model) {
  const std::vector<Point2> undistorted = undistort_points(model, distorted);
  const Homography H = estimate_homography(board, undistorted);
  Eigen::VectorXd r(2 * static_cast<Eigen::Index>(board.size()));
  for (std::size_t i = 0; i < board.size(); ++i) {
    const Point2 predicted = apply_homography(H, board[i]);
    const double scale = model.denominator((distorted[i] - model.center).squaredNorm());
    const Point2 e = scale * (predicted - undistorted[i]);
    r(2 * static_cast<Eigen::Index>(i)) = e.x();
    r(2 * static_cast<Eigen::Index>(i) + 1) = e.y();
  }
  return r;
}

DivisionCoefficients estimate_division_coeffs(std::span<const Point2> distorted,
                                              std::span<const Point2> board,
                                              const Point2& center, const LMConfig& config) {
  if (distorted.size() != board.size()) {
    throw Error(ErrorKind::LengthMismatch, "division coefficients: list sizes differ");
  }
  if (distorted.size() < 8) {
    throw Error(ErrorKind::InvalidArgument, "division coefficients: at least 8 pairs required");
  }
  // Optimize in radius-normalized units so both coefficients are O(1e-2).
  double scale = 1.0;
  for (const auto& p : distorted) scale = std::max(scale, (p - center).norm());
  const double s2 = scale * scale;
  const double s4 = s2 * s2;
  const auto model_for = [&](const Eigen::VectorXd& x) {
    return DivisionModel{center, x(0) / s2, x(1) / s4};
  };
  const Eigen::Index m = 2 * static_cast<Eigen::Index>(distorted.size());
  const ResidualFn fn = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    try {
      return division_transfer_residuals(distorted, board, model_for(x));
    } catch (const Error&) {
      return Eigen::VectorXd::Constant(m, kSentinelResidual);
    }
  };

  const LMResult fit = levenberg_marquardt(fn, Eigen::Vector2d::Zero(), config);
  DivisionCoefficients out;
  const DivisionModel best = model_for(fit.x);
  out.k1 = best.k1;
  out.k2 = best.k2;
  out.initial_cost = fit.diagnostics.initial_cost;
  out.cost = fit.diagnostics.final_cost;
  out.diagnostics = fit.diagnostics;
  return out;
}

}  // namespace procam
