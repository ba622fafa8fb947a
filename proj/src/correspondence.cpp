#include "procam/correspondence.hpp"

#include <set>
#include <string>

#include "procam/error.hpp"

namespace procam {

std::vector<Point2> generate_board(int rows, int cols, double spacing_mm) {
  if (rows < 2 || cols < 2 || !(spacing_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "board needs ≥ 2×2 corners and positive spacing");
  }
  std::vector<Point2> pts;
  pts.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) pts.emplace_back(c * spacing_mm, r * spacing_mm);
  }
  return pts;
}

void CorrespondenceSet::validate() const {
  if (board.rows < 2 || board.cols < 2 || !(board.spacing_mm > 0.0)) {
    throw Error(ErrorKind::Schema, "board: rows/cols must be ≥ 2 and spacing_mm > 0");
  }
  if (camera_distorted.size() != board_points.size() ||
      projector_points.size() != board_points.size()) {
    throw Error(ErrorKind::Schema, "points: board/camera/projector arrays differ in length");
  }
  const std::size_t expected = static_cast<std::size_t>(board.corner_count());
  std::set<int> unique_dropped(dropped.begin(), dropped.end());
  for (int d : unique_dropped) {
    if (d < 0 || d >= board.corner_count()) {
      throw Error(ErrorKind::Schema, "dropped: corner index " + std::to_string(d) + " out of range");
    }
  }
  if (board_points.size() + unique_dropped.size() != expected ||
      unique_dropped.size() != dropped.size()) {
    throw Error(ErrorKind::Schema, "points: " + std::to_string(board_points.size()) +
                                       " points (+" + std::to_string(dropped.size()) +
                                       " dropped) for a " + std::to_string(board.rows) + "x" +
                                       std::to_string(board.cols) + " board (" +
                                       std::to_string(expected) + " corners)");
  }
}

}  // namespace procam
