#pragma once

#include "procam/kernels.hpp"

namespace procam::kernels {

inline constexpr double kMinDenominator = 1e-9;

#if defined(PROCAM_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table();
#endif

}  // namespace procam::kernels
