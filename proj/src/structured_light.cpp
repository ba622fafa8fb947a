#include "procam/structured_light.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "procam/error.hpp"
#include "procam/kernels.hpp"

namespace procam {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

std::uint32_t gray_decode(std::uint32_t g) {
  g ^= g >> 1;
  g ^= g >> 2;
  g ^= g >> 4;
  g ^= g >> 8;
  g ^= g >> 16;
  return g;
}

int gray_bits_for(int extent) {
  if (extent <= 1) return 0;
  return static_cast<int>(std::bit_width(static_cast<unsigned>(extent - 1)));
}

std::size_t PatternLayout::direct_index(PatternAxis axis, int bit) const {
  const int bits = axis == PatternAxis::Columns ? column_bits : row_bits;
  const std::size_t base = axis == PatternAxis::Columns ? 0 : 2 * static_cast<std::size_t>(column_bits);
  return base + 2 * static_cast<std::size_t>(bits - 1 - bit);
}

PatternLayout make_pattern_layout(int projector_width, int projector_height) {
  if (projector_width < 2 || projector_height < 2 || projector_width > 65536 ||
      projector_height > 65536) {
    throw Error(ErrorKind::InvalidArgument, "pattern layout: projector size out of range");
  }
  PatternLayout layout;
  layout.projector_width = projector_width;
  layout.projector_height = projector_height;
  layout.column_bits = gray_bits_for(projector_width);
  layout.row_bits = gray_bits_for(projector_height);
  for (PatternAxis axis : {PatternAxis::Columns, PatternAxis::Rows}) {
    const int bits = axis == PatternAxis::Columns ? layout.column_bits : layout.row_bits;
    for (int bit = bits - 1; bit >= 0; --bit) {
      layout.frames.push_back({PatternFrame::Kind::Bit, axis, bit, false});
      layout.frames.push_back({PatternFrame::Kind::Bit, axis, bit, true});
    }
  }
  layout.frames.push_back({PatternFrame::Kind::White, PatternAxis::Columns, 0, false});
  layout.frames.push_back({PatternFrame::Kind::Black, PatternAxis::Columns, 0, false});
  return layout;
}

std::uint8_t pattern_value(const PatternFrame& frame, int column, int row) {
  switch (frame.kind) {
    case PatternFrame::Kind::White: return 255;
    case PatternFrame::Kind::Black: return 0;
    case PatternFrame::Kind::Bit: break;
  }
  const auto index = static_cast<std::uint32_t>(frame.axis == PatternAxis::Columns ? column : row);
  const bool on = ((gray_encode(index) >> frame.bit) & 1u) != 0;
  return (on != frame.inverse) ? 255 : 0;
}

PatternSet generate_patterns(int projector_width, int projector_height) {
  PatternSet set;
  set.layout = make_pattern_layout(projector_width, projector_height);
  set.patterns.reserve(set.layout.size());
  for (const PatternFrame& frame : set.layout.frames) {
    GrayImage img(projector_width, projector_height);
    for (int y = 0; y < projector_height; ++y) {
      for (int x = 0; x < projector_width; ++x) img.at(x, y) = pattern_value(frame, x, y);
    }
    set.patterns.push_back(std::move(img));
  }
  return set;
}

std::size_t CorrespondenceMap::decodable_count() const {
  std::size_t n = 0;
  for (auto d : decodable) n += d != 0;
  return n;
}

CorrespondenceMap decode(std::span<const GrayImage> stack, const PatternLayout& layout,
                         const DecodeOptions& options) {
  if (stack.size() != layout.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "decode: stack has " + std::to_string(stack.size()) + " frames, layout expects " +
                    std::to_string(layout.size()));
  }
  const int w = stack.front().width;
  const int h = stack.front().height;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (!stack[i].valid() || stack[i].width != w || stack[i].height != h) {
      throw Error(ErrorKind::DimensionMismatch,
                  "decode: frame " + std::to_string(i) + " has inconsistent dimensions");
    }
  }

  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const kernels::KernelTable& k = kernels::active_kernels();
  CorrespondenceMap map;
  map.width = w;
  map.height = h;
  map.projector_width = layout.projector_width;
  map.projector_height = layout.projector_height;
  map.column.assign(n, 0);
  map.row.assign(n, 0);
  map.contrast.assign(n, 255);
  map.decodable.assign(n, 0);

  for (PatternAxis axis : {PatternAxis::Columns, PatternAxis::Rows}) {
    const int bits = axis == PatternAxis::Columns ? layout.column_bits : layout.row_bits;
    std::vector<std::uint16_t>& codes = axis == PatternAxis::Columns ? map.column : map.row;
    for (int bit = bits - 1; bit >= 0; --bit) {
      const std::size_t idx = layout.direct_index(axis, bit);
      k.accumulate_gray_bit(stack[idx].data.data(), stack[idx + 1].data.data(), n, codes.data(),
                            map.contrast.data());
    }
    k.gray_to_binary(codes.data(), n);
  }

  std::vector<std::uint8_t> span(n);
  k.intensity_span(stack[layout.white_index()].data.data(),
                   stack[layout.black_index()].data.data(), n, span.data());
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = map.contrast[i] >= options.contrast_threshold &&
                    span[i] >= options.span_threshold &&
                    map.column[i] < layout.projector_width && map.row[i] < layout.projector_height;
    map.decodable[i] = ok ? 1 : 0;
  }
  return map;
}

std::optional<Point2> try_lift_corner(const CorrespondenceMap& map, const Point2& corner,
                                      const LiftOptions& options) {
  if (!corner.allFinite()) return std::nullopt;
  const int r = options.window_radius;
  const int cx = static_cast<int>(std::lround(corner.x()));
  const int cy = static_cast<int>(std::lround(corner.y()));
  std::vector<Point2> cam, proj;
  for (int y = std::max(0, cy - r); y <= std::min(map.height - 1, cy + r); ++y) {
    for (int x = std::max(0, cx - r); x <= std::min(map.width - 1, cx + r); ++x) {
      const std::size_t i = map.index(x, y);
      if (!map.decodable[i]) continue;
      cam.emplace_back(x, y);
      proj.emplace_back(map.column[i], map.row[i]);
    }
  }
  if (static_cast<int>(cam.size()) < options.min_support) return std::nullopt;
  try {
    return apply_homography(estimate_homography(cam, proj), corner);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<Point2> lift_corners(const CorrespondenceMap& map, std::span<const Point2> corners,
                                 const LiftOptions& options) {
  std::vector<Point2> out;
  out.reserve(corners.size());
  for (std::size_t i = 0; i < corners.size(); ++i) {
    auto lifted = try_lift_corner(map, corners[i], options);
    if (!lifted) {
      throw Error(ErrorKind::InsufficientSupport,
                  "corner " + std::to_string(i) + " lacks decodable support");
    }
    out.push_back(*lifted);
  }
  return out;
}

}  // namespace procam
