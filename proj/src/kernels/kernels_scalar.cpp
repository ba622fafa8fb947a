#include <cmath>
#include <limits>

#include "kernels_impl.hpp"

namespace procam::kernels {
namespace {

void accumulate_gray_bit(const std::uint8_t* direct, const std::uint8_t* inverse,
                         std::size_t n, std::uint16_t* codes, std::uint8_t* min_contrast) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t d = direct[i];
    const std::uint8_t v = inverse[i];
    const std::uint8_t diff = d > v ? d - v : v - d;
    codes[i] = static_cast<std::uint16_t>((codes[i] << 1) | (d > v ? 1u : 0u));
    if (diff < min_contrast[i]) min_contrast[i] = diff;
  }
}

void gray_to_binary(std::uint16_t* codes, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint16_t b = codes[i];
    b ^= b >> 1;
    b ^= b >> 2;
    b ^= b >> 4;
    b ^= b >> 8;
    codes[i] = b;
  }
}

void intensity_span(const std::uint8_t* white, const std::uint8_t* black, std::size_t n,
                    std::uint8_t* span) {
  for (std::size_t i = 0; i < n; ++i) {
    span[i] = white[i] > black[i] ? static_cast<std::uint8_t>(white[i] - black[i]) : 0;
  }
}

std::size_t undistort_points(const double* u, const double* v, std::size_t n, double cu,
                             double cv, double k1, double k2, double* out_u, double* out_v) {
  std::size_t singular = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = u[i] - cu;
    const double dy = v[i] - cv;
    const double r2 = dx * dx + dy * dy;
    const double d = 1.0 + k1 * r2 + k2 * r2 * r2;
    if (!(d > kMinDenominator)) {
      out_u[i] = out_v[i] = std::numeric_limits<double>::quiet_NaN();
      ++singular;
      continue;
    }
    // p + (p − c)·(1/d − 1) keeps the identity and the center exact.
    const double w = 1.0 / d - 1.0;
    out_u[i] = u[i] + dx * w;
    out_v[i] = v[i] + dy * w;
  }
  return singular;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", accumulate_gray_bit, gray_to_binary,
                                 intensity_span, undistort_points};
  return table;
}

}  // namespace procam::kernels
