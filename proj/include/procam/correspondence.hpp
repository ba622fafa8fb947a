#pragma once

#include <vector>

#include "procam/geometry.hpp"

namespace procam {

/// Chessboard corner grid: `rows` × `cols` interior corners, `spacing_mm`
/// apart. Corners are enumerated row-major from the origin corner, +x along
/// columns.
struct BoardSpec {
  int rows = 6;
  int cols = 10;
  double spacing_mm = 23.0;

  int corner_count() const { return rows * cols; }
  /// Extent of the corner grid along board x.
  double width_mm() const { return (cols - 1) * spacing_mm; }
};

/// Aligned triples (board corner, distorted camera point, projector point).
/// Corners that could not be observed are listed in `dropped` and omitted
/// from the arrays.
struct CorrespondenceSet {
  BoardSpec board;
  ImageSize camera;
  ImageSize projector;
  std::vector<Point2> board_points;
  std::vector<Point2> camera_distorted;
  std::vector<Point2> projector_points;
  std::vector<int> dropped;

  std::size_t size() const { return board_points.size(); }
  /// Throws Schema when array lengths differ or do not account for every
  /// board corner.
  void validate() const;
};

/// Row-major corner grid in board millimetres.
std::vector<Point2> generate_board(int rows, int cols, double spacing_mm);

}  // namespace procam
