#pragma once

// Data-parallel inner loops used by Gray-code decoding and batch
// undistortion. Each kernel has a scalar reference implementation and, where
// the build and CPU allow it, an AVX2 variant. Variants are required to be
// bit-identical to the scalar reference.

#include <cstddef>
#include <cstdint>

namespace procam::kernels {

struct KernelTable {
  const char* name;

  /// codes[i] = (codes[i] << 1) | (direct[i] > inverse[i]);
  /// min_contrast[i] = min(min_contrast[i], |direct[i] − inverse[i]|).
  void (*accumulate_gray_bit)(const std::uint8_t* direct, const std::uint8_t* inverse,
                              std::size_t n, std::uint16_t* codes,
                              std::uint8_t* min_contrast);

  /// In-place reflected-binary → binary conversion of 16-bit codes.
  void (*gray_to_binary)(std::uint16_t* codes, std::size_t n);

  /// span[i] = saturating white[i] − black[i].
  void (*intensity_span)(const std::uint8_t* white, const std::uint8_t* black,
                         std::size_t n, std::uint8_t* span);

  /// Division-model undistortion of n points about (cu, cv). Points whose
  /// denominator is ≤ 1e-9 get NaN outputs; returns how many did.
  std::size_t (*undistort_points)(const double* u, const double* v, std::size_t n,
                                  double cu, double cv, double k1, double k2,
                                  double* out_u, double* out_v);
};

const KernelTable& scalar_kernels();

/// AVX2 table, or nullptr when not compiled in or unsupported by this CPU.
const KernelTable* avx2_kernels();

/// Best table for this machine. `PROCAM_CALIB_SIMD=scalar` forces the
/// scalar reference.
const KernelTable& active_kernels();

}  // namespace procam::kernels
