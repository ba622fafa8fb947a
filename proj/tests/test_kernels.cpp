#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

#include "procam/kernels.hpp"
#include "procam/rng.hpp"

namespace procam::kernels {
namespace {

const std::size_t kLengths[] = {0, 1, 3, 4, 5, 15, 16, 17, 31, 32, 33, 63, 64, 65, 1000, 4099};

std::vector<std::uint8_t> random_bytes(Xoshiro256& rng, std::size_t n) {
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) {
    // Bias towards the extremes and ties, where sign handling matters.
    const std::uint64_t r = rng.next();
    switch (r % 4) {
      case 0: b = 0; break;
      case 1: b = 255; break;
      default: b = static_cast<std::uint8_t>(r >> 8);
    }
  }
  return out;
}

// Reference Gray decode by prefix XOR over the bits.
std::uint16_t gray_to_binary_oracle(std::uint16_t g) {
  std::uint16_t b = 0;
  int bit = 0;
  for (int i = 15; i >= 0; --i) {
    bit ^= (g >> i) & 1;
    b |= static_cast<std::uint16_t>(bit << i);
  }
  return b;
}

TEST(ScalarKernels, GrayToBinaryMatchesOracle) {
  std::vector<std::uint16_t> codes(65536);
  for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<std::uint16_t>(i);
  scalar_kernels().gray_to_binary(codes.data(), codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    ASSERT_EQ(codes[i], gray_to_binary_oracle(static_cast<std::uint16_t>(i)));
  }
}

TEST(ScalarKernels, AccumulateGrayBitSemantics) {
  const std::uint8_t direct[] = {200, 10, 50, 0};
  const std::uint8_t inverse[] = {20, 30, 50, 255};
  std::uint16_t codes[] = {1, 1, 0, 0};
  std::uint8_t contrast[] = {255, 5, 255, 255};
  scalar_kernels().accumulate_gray_bit(direct, inverse, 4, codes, contrast);
  EXPECT_EQ(codes[0], 3);
  EXPECT_EQ(codes[1], 2);
  EXPECT_EQ(codes[2], 0);
  EXPECT_EQ(codes[3], 0);
  EXPECT_EQ(contrast[0], 180);
  EXPECT_EQ(contrast[1], 5);
  EXPECT_EQ(contrast[2], 0);
  EXPECT_EQ(contrast[3], 255);
}

TEST(ScalarKernels, IntensitySpanSaturates) {
  const std::uint8_t white[] = {255, 10, 7};
  const std::uint8_t black[] = {0, 30, 7};
  std::uint8_t span[3];
  scalar_kernels().intensity_span(white, black, 3, span);
  EXPECT_EQ(span[0], 255);
  EXPECT_EQ(span[1], 0);
  EXPECT_EQ(span[2], 0);
}

class Avx2Equivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    simd_ = avx2_kernels();
    if (simd_ == nullptr) GTEST_SKIP() << "AVX2 kernels unavailable on this build or CPU";
  }
  const KernelTable* simd_ = nullptr;
  const KernelTable& ref_ = scalar_kernels();
};

TEST_F(Avx2Equivalence, AccumulateGrayBit) {
  Xoshiro256 rng(21);
  for (std::size_t n : kLengths) {
    const auto direct = random_bytes(rng, n), inverse = random_bytes(rng, n);
    std::vector<std::uint16_t> codes_a(n), codes_b;
    for (auto& c : codes_a) c = static_cast<std::uint16_t>(rng.next());
    codes_b = codes_a;
    auto contrast_a = random_bytes(rng, n);
    auto contrast_b = contrast_a;
    ref_.accumulate_gray_bit(direct.data(), inverse.data(), n, codes_a.data(), contrast_a.data());
    simd_->accumulate_gray_bit(direct.data(), inverse.data(), n, codes_b.data(),
                               contrast_b.data());
    EXPECT_EQ(codes_a, codes_b) << "n = " << n;
    EXPECT_EQ(contrast_a, contrast_b) << "n = " << n;
  }
}

TEST_F(Avx2Equivalence, GrayToBinary) {
  Xoshiro256 rng(22);
  for (std::size_t n : kLengths) {
    std::vector<std::uint16_t> a(n);
    for (auto& c : a) c = static_cast<std::uint16_t>(rng.next());
    auto b = a;
    ref_.gray_to_binary(a.data(), n);
    simd_->gray_to_binary(b.data(), n);
    EXPECT_EQ(a, b) << "n = " << n;
  }
}

TEST_F(Avx2Equivalence, IntensitySpan) {
  Xoshiro256 rng(23);
  for (std::size_t n : kLengths) {
    const auto white = random_bytes(rng, n), black = random_bytes(rng, n);
    std::vector<std::uint8_t> a(n), b(n);
    ref_.intensity_span(white.data(), black.data(), n, a.data());
    simd_->intensity_span(white.data(), black.data(), n, b.data());
    EXPECT_EQ(a, b) << "n = " << n;
  }
}

TEST_F(Avx2Equivalence, UndistortPointsBitIdentical) {
  Xoshiro256 rng(24);
  for (int round = 0; round < 20; ++round) {
    const double cu = rng.uniform(500, 800), cv = rng.uniform(300, 600);
    // Some rounds are strong enough to make outer points singular.
    const double k1 = round % 5 == 0 ? -4e-6 : rng.uniform(-2e-7, 2e-7);
    const double k2 = rng.uniform(-1e-14, 1e-14);
    for (std::size_t n : kLengths) {
      std::vector<double> u(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = rng.uniform(-200, 1500);
        v[i] = rng.uniform(-200, 1000);
      }
      if (n > 2) {
        u[1] = cu;
        v[1] = cv;
      }
      std::vector<double> au(n), av(n), bu(n), bv(n);
      const std::size_t sa =
          ref_.undistort_points(u.data(), v.data(), n, cu, cv, k1, k2, au.data(), av.data());
      const std::size_t sb =
          simd_->undistort_points(u.data(), v.data(), n, cu, cv, k1, k2, bu.data(), bv.data());
      ASSERT_EQ(sa, sb);
      // memcmp so that NaN outputs compare equal too.
      EXPECT_EQ(std::memcmp(au.data(), bu.data(), n * sizeof(double)), 0) << "n = " << n;
      EXPECT_EQ(std::memcmp(av.data(), bv.data(), n * sizeof(double)), 0) << "n = " << n;
    }
  }
}

TEST(KernelDispatch, ActiveTableIsKnown) {
  const std::string_view name = active_kernels().name;
  EXPECT_TRUE(name == "scalar" || name == "avx2");
  if (avx2_kernels() == nullptr) {
    EXPECT_EQ(name, "scalar");
  }
}

}  // namespace
}  // namespace procam::kernels
