#include <gtest/gtest.h>

#include <bit>
#include <cmath>

#include "procam/simulator.hpp"
#include "procam/structured_light.hpp"
#include "test_support.hpp"

namespace procam {
namespace {

using testing::error_kind_of;
using testing::map_homogeneous;

std::vector<GrayImage> identity_stack(int w, int h) {
  return generate_patterns(w, h).patterns;
}

TEST(PatternLayout, CountsFollowTheBitWidths) {
  EXPECT_EQ(make_pattern_layout(1920, 1080).size(), 46u);
  EXPECT_EQ(make_pattern_layout(4, 4).size(), 10u);
  EXPECT_EQ(make_pattern_layout(2, 2).size(), 6u);
  EXPECT_EQ(make_pattern_layout(1025, 3).size(), 2u * (11 + 2) + 2);
  for (int w = 2; w <= 5000; w += 37) {
    EXPECT_EQ(gray_bits_for(w), static_cast<int>(std::ceil(std::log2(w)))) << w;
  }
}

TEST(PatternLayout, FrameOrder) {
  const PatternLayout layout = make_pattern_layout(16, 4);
  ASSERT_EQ(layout.size(), 14u);
  using K = PatternFrame::Kind;
  EXPECT_EQ(layout.frames[0], (PatternFrame{K::Bit, PatternAxis::Columns, 3, false}));
  EXPECT_EQ(layout.frames[1], (PatternFrame{K::Bit, PatternAxis::Columns, 3, true}));
  EXPECT_EQ(layout.frames[7], (PatternFrame{K::Bit, PatternAxis::Columns, 0, true}));
  EXPECT_EQ(layout.frames[8], (PatternFrame{K::Bit, PatternAxis::Rows, 1, false}));
  EXPECT_EQ(layout.frames[12].kind, K::White);
  EXPECT_EQ(layout.frames[13].kind, K::Black);
  EXPECT_EQ(layout.direct_index(PatternAxis::Rows, 0), 10u);
  EXPECT_EQ(layout.white_index(), 12u);
}

TEST(PatternLayout, RejectsTinyProjectors) {
  EXPECT_EQ(error_kind_of([] { make_pattern_layout(1, 100); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(error_kind_of([] { make_pattern_layout(100, 0); }), ErrorKind::InvalidArgument);
}

TEST(GrayCode, DecodeInvertsEncode) {
  for (std::uint32_t v = 0; v < (1u << 16); ++v) ASSERT_EQ(gray_decode(gray_encode(v)), v);
}

TEST(GrayCode, AdjacentIndicesDifferInOneBit) {
  for (std::uint32_t c = 0; c + 1 < 4096; ++c) {
    ASSERT_EQ(std::popcount(gray_encode(c) ^ gray_encode(c + 1)), 1) << c;
  }
}

TEST(GeneratePatterns, BitPlanesMatchGrayOracle) {
  const int w = 1920, h = 1080;
  const PatternSet set = generate_patterns(w, h);
  ASSERT_EQ(set.patterns.size(), 46u);
  const auto& L = set.layout;
  for (int bit = 0; bit < L.column_bits; ++bit) {
    const GrayImage& direct = set.patterns[L.direct_index(PatternAxis::Columns, bit)];
    const GrayImage& inverse = set.patterns[L.direct_index(PatternAxis::Columns, bit) + 1];
    for (int c = 0; c < w; ++c) {
      const bool on = ((c ^ (c >> 1)) >> bit) & 1;
      for (int row : {0, 517, h - 1}) {
        ASSERT_EQ(direct.at(c, row), on ? 255 : 0) << "bit " << bit << " column " << c;
        ASSERT_EQ(inverse.at(c, row), on ? 0 : 255);
      }
    }
  }
  for (int bit = 0; bit < L.row_bits; ++bit) {
    const GrayImage& direct = set.patterns[L.direct_index(PatternAxis::Rows, bit)];
    for (int r = 0; r < h; ++r) {
      const bool on = ((r ^ (r >> 1)) >> bit) & 1;
      ASSERT_EQ(direct.at(1000, r), on ? 255 : 0);
    }
  }
  for (std::uint8_t v : set.patterns[L.white_index()].data) ASSERT_EQ(v, 255);
  for (std::uint8_t v : set.patterns[L.black_index()].data) ASSERT_EQ(v, 0);
}

TEST(Decode, IdentityRenderingIsExact) {
  for (auto [w, h] : {std::pair{320, 200}, std::pair{97, 61}}) {
    const auto stack = identity_stack(w, h);
    const auto map = decode(stack, make_pattern_layout(w, h));
    ASSERT_EQ(map.decodable_count(), static_cast<std::size_t>(w * h));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        ASSERT_EQ(map.column[map.index(x, y)], x);
        ASSERT_EQ(map.row[map.index(x, y)], y);
      }
    }
  }
}

TEST(Decode, AllBlackIsUndecodable) {
  const PatternLayout layout = make_pattern_layout(64, 32);
  const std::vector<GrayImage> stack(layout.size(), GrayImage(50, 40, 0));
  const auto map = decode(stack, layout);
  EXPECT_EQ(map.decodable_count(), 0u);
}

TEST(Decode, MonotoneRescalingDoesNotChangeTheResult) {
  const int w = 128, h = 96;
  const auto stack = identity_stack(w, h);
  const auto layout = make_pattern_layout(w, h);
  const auto reference = decode(stack, layout);

  Xoshiro256 rng(31);
  std::vector<double> gain(static_cast<std::size_t>(w) * h), offset(gain.size());
  for (std::size_t i = 0; i < gain.size(); ++i) {
    gain[i] = rng.uniform(0.3, 0.7);
    offset[i] = rng.uniform(0.0, 60.0);
  }
  auto scaled = stack;
  for (auto& img : scaled) {
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      img.data[i] = static_cast<std::uint8_t>(std::lround(offset[i] + gain[i] * img.data[i]));
    }
  }
  const auto map = decode(scaled, layout);
  EXPECT_EQ(map.column, reference.column);
  EXPECT_EQ(map.row, reference.row);
  EXPECT_EQ(map.decodable, reference.decodable);
}

TEST(Decode, ThresholdsMarkLowContrastPixels) {
  const int w = 16, h = 16;
  auto stack = identity_stack(w, h);
  const auto layout = make_pattern_layout(w, h);
  // Pixel (3, 4): shrink one bit pair to a 4-level difference.
  const std::size_t idx = layout.direct_index(PatternAxis::Columns, 1);
  const std::uint8_t hi = stack[idx].at(3, 4) ? 130 : 126;
  stack[idx].at(3, 4) = hi;
  stack[idx + 1].at(3, 4) = static_cast<std::uint8_t>(256 - hi);
  // Pixel (5, 6): dim projector light.
  stack[layout.white_index()].at(5, 6) = 8;
  const auto map = decode(stack, layout);
  EXPECT_FALSE(map.is_decodable(3, 4));
  EXPECT_EQ(map.contrast[map.index(3, 4)], 4);
  EXPECT_FALSE(map.is_decodable(5, 6));
  EXPECT_EQ(map.decodable_count(), static_cast<std::size_t>(w * h - 2));

  const auto relaxed = decode(stack, layout, {4, 8});
  EXPECT_TRUE(relaxed.is_decodable(3, 4));
  EXPECT_TRUE(relaxed.is_decodable(5, 6));
}

TEST(Decode, DimensionChecks) {
  const auto layout = make_pattern_layout(16, 16);
  auto stack = identity_stack(16, 16);
  stack.pop_back();
  EXPECT_EQ(error_kind_of([&] { decode(stack, layout); }), ErrorKind::DimensionMismatch);
  stack.push_back(GrayImage(16, 15));
  EXPECT_EQ(error_kind_of([&] { decode(stack, layout); }), ErrorKind::DimensionMismatch);
}

TEST(Decode, SimulatedSceneMatchesGroundTruth) {
  const GraycodeScene scene = synthesize_graycode_stack(SceneConfig{});
  const auto map = decode(scene.stack, scene.layout);
  std::size_t lit = 0, good = 0;
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const auto truth = scene.camera_to_projector(Point2(x, y));
      // Lit: the nearest projector pixel exists.
      if (!truth || std::floor(truth->x() + 0.5) < 0 || std::floor(truth->y() + 0.5) < 0 ||
          std::floor(truth->x() + 0.5) >= 1920 || std::floor(truth->y() + 0.5) >= 1080) {
        continue;
      }
      ++lit;
      if (!map.is_decodable(x, y)) continue;
      const std::size_t i = map.index(x, y);
      if ((Point2(map.column[i], map.row[i]) - *truth).norm() <= 1.0) ++good;
    }
  }
  ASSERT_GT(lit, 10000u);
  EXPECT_GE(static_cast<double>(good), 0.99 * static_cast<double>(lit));
}

CorrespondenceMap identity_map(int w, int h) {
  CorrespondenceMap map;
  map.width = map.projector_width = w;
  map.height = map.projector_height = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  map.column.resize(n);
  map.row.resize(n);
  map.decodable.assign(n, 1);
  map.contrast.assign(n, 255);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      map.column[map.index(x, y)] = static_cast<std::uint16_t>(x);
      map.row[map.index(x, y)] = static_cast<std::uint16_t>(y);
    }
  }
  return map;
}

TEST(LiftCorners, IdentityMapReturnsTheCorner) {
  const auto map = identity_map(200, 150);
  const std::vector<Point2> corners{{100.3, 50.7}, {20.25, 130.9}, {2.0, 2.0}};
  const auto lifted = lift_corners(map, corners);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    EXPECT_LT((lifted[i] - corners[i]).norm(), 1e-6);
  }
}

TEST(LiftCorners, UndecodableRegionIsReported) {
  auto map = identity_map(200, 150);
  for (int y = 60; y < 120; ++y) {
    for (int x = 100; x < 180; ++x) map.decodable[map.index(x, y)] = 0;
  }
  const std::vector<Point2> corners{{30.0, 30.0}, {140.0, 90.0}};
  EXPECT_FALSE(try_lift_corner(map, corners[1]).has_value());
  try {
    lift_corners(map, corners);
    ADD_FAILURE() << "expected InsufficientSupport";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientSupport);
    EXPECT_NE(std::string(e.what()).find("corner 1"), std::string::npos);
  }
}

struct HomographyScene {
  Mat3 H;
  PatternLayout layout;
  CorrespondenceMap map;
};

HomographyScene homography_scene() {
  HomographyScene s;
  s.H << 1.35, 0.12, 180.0, -0.08, 1.28, 95.0, 1.1e-4, -6e-5, 1.0;
  s.layout = make_pattern_layout(1920, 1080);
  const PixelMapping mapping = [H = s.H](const Point2& p) -> std::optional<Point2> {
    return map_homogeneous(H, p);
  };
  const auto stack = render_graycode_stack(s.layout, {640, 480}, mapping);
  s.map = decode(stack, s.layout);
  return s;
}

TEST(LiftCorners, KnownHomographyAndWindowInvariance) {
  const HomographyScene s = homography_scene();
  Xoshiro256 rng(41);
  const auto corners = testing::random_points(rng, 40, 40.0, 440.0);
  const auto lifted = lift_corners(s.map, corners);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    EXPECT_LT((lifted[i] - map_homogeneous(s.H, corners[i])).norm(), 0.3) << i;
  }
  for (int radius : {12, 18}) {
    const auto other = lift_corners(s.map, corners, {radius, 16});
    for (std::size_t i = 0; i < corners.size(); ++i) {
      EXPECT_LT((other[i] - lifted[i]).norm(), 0.1) << "radius " << radius << " corner " << i;
    }
  }
}

}  // namespace
}  // namespace procam
