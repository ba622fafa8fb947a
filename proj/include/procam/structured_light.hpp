#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "procam/geometry.hpp"

namespace procam {

/// Row-major 8-bit intensity image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  bool valid() const {
    return width > 0 && height > 0 &&
           data.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

enum class PatternAxis { Columns, Rows };

/// One frame of the projected sequence.
struct PatternFrame {
  enum class Kind { Bit, White, Black };
  Kind kind = Kind::Bit;
  PatternAxis axis = PatternAxis::Columns;
  int bit = 0;  // bit index of the Gray code, 0 = LSB
  bool inverse = false;

  friend bool operator==(const PatternFrame&, const PatternFrame&) = default;
};

/// Frame order: column bits MSB→LSB, each followed by its inverse; then row
/// bits likewise; then all-white; then all-black.
struct PatternLayout {
  int projector_width = 0;
  int projector_height = 0;
  int column_bits = 0;
  int row_bits = 0;
  std::vector<PatternFrame> frames;

  /// 2·(ceil(log2 w) + ceil(log2 h)) + 2.
  std::size_t size() const { return frames.size(); }
  std::size_t white_index() const { return frames.size() - 2; }
  std::size_t black_index() const { return frames.size() - 1; }
  /// Index of the direct frame for `bit` on `axis`; its inverse follows it.
  std::size_t direct_index(PatternAxis axis, int bit) const;
};

struct PatternSet {
  PatternLayout layout;
  std::vector<GrayImage> patterns;
};

inline std::uint32_t gray_encode(std::uint32_t v) { return v ^ (v >> 1); }
std::uint32_t gray_decode(std::uint32_t g);

/// Number of Gray bits needed to address `extent` indices: ceil(log2 extent).
int gray_bits_for(int extent);

/// Throws InvalidArgument unless 2 ≤ w, h ≤ 65536.
PatternLayout make_pattern_layout(int projector_width, int projector_height);

/// Renders every frame of the layout at projector resolution.
PatternSet generate_patterns(int projector_width, int projector_height);

/// Intensity of projector pixel (column, row) in frame `frame`: 0 or 255.
std::uint8_t pattern_value(const PatternFrame& frame, int column, int row);

struct DecodeOptions {
  int contrast_threshold = 5;  // 8-bit levels, per bit pair
  int span_threshold = 10;     // white − black
};

/// Per camera pixel decoded projector coordinates.
struct CorrespondenceMap {
  int width = 0;
  int height = 0;
  int projector_width = 0;
  int projector_height = 0;
  std::vector<std::uint16_t> column;
  std::vector<std::uint16_t> row;
  std::vector<std::uint8_t> decodable;
  /// Minimum |direct − inverse| over all bit pairs.
  std::vector<std::uint8_t> contrast;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool is_decodable(int x, int y) const { return decodable[index(x, y)] != 0; }
  std::size_t decodable_count() const;
};

/// Decodes a captured stack given in layout order. Throws DimensionMismatch
/// when the stack length or image sizes disagree with the layout.
CorrespondenceMap decode(std::span<const GrayImage> stack, const PatternLayout& layout,
                         const DecodeOptions& options = {});

struct LiftOptions {
  int window_radius = 15;
  int min_support = 16;
};

/// Fits a local homography from camera pixels to decoded projector
/// coordinates around `corner` and maps the corner through it. Returns
/// nullopt when fewer than min_support pixels decode or the fit degenerates.
std::optional<Point2> try_lift_corner(const CorrespondenceMap& map, const Point2& corner,
                                      const LiftOptions& options = {});

/// Strict form: throws InsufficientSupport naming the first failing corner.
std::vector<Point2> lift_corners(const CorrespondenceMap& map, std::span<const Point2> corners,
                                 const LiftOptions& options = {});

}  // namespace procam
