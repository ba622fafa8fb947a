// Compiled with -mavx2 only; must not be reached unless the CPU reports AVX2.
#include <immintrin.h>

#include <cmath>
#include <limits>

#include "kernels_impl.hpp"

namespace procam::kernels {
namespace {

void accumulate_gray_bit(const std::uint8_t* direct, const std::uint8_t* inverse,
                         std::size_t n, std::uint16_t* codes, std::uint8_t* min_contrast) {
  const __m256i sign = _mm256_set1_epi8(static_cast<char>(0x80));
  const __m256i one16 = _mm256_set1_epi16(1);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(direct + i));
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(inverse + i));
    // Unsigned compare via sign flip.
    const __m256i gt = _mm256_cmpgt_epi8(_mm256_xor_si256(d, sign), _mm256_xor_si256(v, sign));
    const __m256i diff = _mm256_or_si256(_mm256_subs_epu8(d, v), _mm256_subs_epu8(v, d));
    __m256i* mc = reinterpret_cast<__m256i*>(min_contrast + i);
    _mm256_storeu_si256(mc, _mm256_min_epu8(_mm256_loadu_si256(mc), diff));

    const __m256i bits_lo = _mm256_and_si256(
        _mm256_cvtepi8_epi16(_mm256_castsi256_si128(gt)), one16);
    const __m256i bits_hi = _mm256_and_si256(
        _mm256_cvtepi8_epi16(_mm256_extracti128_si256(gt, 1)), one16);
    __m256i* c0 = reinterpret_cast<__m256i*>(codes + i);
    __m256i* c1 = reinterpret_cast<__m256i*>(codes + i + 16);
    _mm256_storeu_si256(c0, _mm256_or_si256(_mm256_slli_epi16(_mm256_loadu_si256(c0), 1), bits_lo));
    _mm256_storeu_si256(c1, _mm256_or_si256(_mm256_slli_epi16(_mm256_loadu_si256(c1), 1), bits_hi));
  }
  for (; i < n; ++i) {
    const std::uint8_t d = direct[i];
    const std::uint8_t v = inverse[i];
    const std::uint8_t diff = d > v ? d - v : v - d;
    codes[i] = static_cast<std::uint16_t>((codes[i] << 1) | (d > v ? 1u : 0u));
    if (diff < min_contrast[i]) min_contrast[i] = diff;
  }
}

void gray_to_binary(std::uint16_t* codes, std::size_t n) {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    __m256i* p = reinterpret_cast<__m256i*>(codes + i);
    __m256i b = _mm256_loadu_si256(p);
    b = _mm256_xor_si256(b, _mm256_srli_epi16(b, 1));
    b = _mm256_xor_si256(b, _mm256_srli_epi16(b, 2));
    b = _mm256_xor_si256(b, _mm256_srli_epi16(b, 4));
    b = _mm256_xor_si256(b, _mm256_srli_epi16(b, 8));
    _mm256_storeu_si256(p, b);
  }
  for (; i < n; ++i) {
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
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i w = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(white + i));
    const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(black + i));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(span + i), _mm256_subs_epu8(w, b));
  }
  for (; i < n; ++i) {
    span[i] = white[i] > black[i] ? static_cast<std::uint8_t>(white[i] - black[i]) : 0;
  }
}

std::size_t undistort_points(const double* u, const double* v, std::size_t n, double cu,
                             double cv, double k1, double k2, double* out_u, double* out_v) {
  const __m256d vcu = _mm256_set1_pd(cu);
  const __m256d vcv = _mm256_set1_pd(cv);
  const __m256d vk1 = _mm256_set1_pd(k1);
  const __m256d vk2 = _mm256_set1_pd(k2);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d floor = _mm256_set1_pd(kMinDenominator);
  const __m256d nan = _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN());
  std::size_t singular = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pu = _mm256_loadu_pd(u + i);
    const __m256d pv = _mm256_loadu_pd(v + i);
    const __m256d dx = _mm256_sub_pd(pu, vcu);
    const __m256d dy = _mm256_sub_pd(pv, vcv);
    const __m256d r2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    // Same association as the scalar reference: (1 + k1·r²) + (k2·r²)·r².
    const __m256d d = _mm256_add_pd(_mm256_add_pd(one, _mm256_mul_pd(vk1, r2)),
                                    _mm256_mul_pd(_mm256_mul_pd(vk2, r2), r2));
    const __m256d ok = _mm256_cmp_pd(d, floor, _CMP_GT_OQ);
    const int okbits = _mm256_movemask_pd(ok);
    singular += static_cast<std::size_t>(4 - __builtin_popcount(okbits));
    const __m256d w = _mm256_sub_pd(_mm256_div_pd(one, d), one);
    const __m256d ou = _mm256_add_pd(pu, _mm256_mul_pd(dx, w));
    const __m256d ov = _mm256_add_pd(pv, _mm256_mul_pd(dy, w));
    _mm256_storeu_pd(out_u + i, _mm256_blendv_pd(nan, ou, ok));
    _mm256_storeu_pd(out_v + i, _mm256_blendv_pd(nan, ov, ok));
  }
  if (i < n) {
    singular += scalar_kernels().undistort_points(u + i, v + i, n - i, cu, cv, k1, k2,
                                                  out_u + i, out_v + i);
  }
  return singular;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", accumulate_gray_bit, gray_to_binary, intensity_span,
                                 undistort_points};
  return table;
}

}  // namespace procam::kernels
