#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "procam/calibrate.hpp"
#include "procam/correspondence.hpp"
#include "procam/simulator.hpp"

namespace procam {

inline constexpr int kSchemaVersion = 1;

struct CorrespondenceFile {
  CorrespondenceSet correspondences;
  std::optional<GroundTruth> ground_truth;
};

struct CalibrationFile {
  CalibrationResult result;
  std::string tool_version;
};

/// Gray-code image stack on disk. Pattern paths are stored relative to the
/// manifest and resolved against its directory on load.
struct StackManifest {
  int projector_width = 0;
  int projector_height = 0;
  std::vector<std::filesystem::path> patterns;
};

/// Detected chessboard corners in raw (distorted) camera pixels, row-major
/// over the board grid.
struct CornersFile {
  BoardSpec board;
  ImageSize camera;
  std::vector<Point2> corners;
};

// Parsers throw Schema with the offending field path (or line and column for
// malformed JSON); readers and writers throw Io for file system failures.

std::string serialize_correspondences(const CorrespondenceFile& file);
CorrespondenceFile parse_correspondences(std::string_view text);
CorrespondenceFile read_correspondences(const std::filesystem::path& path);
void write_correspondences(const std::filesystem::path& path, const CorrespondenceFile& file);

std::string serialize_calibration(const CalibrationFile& file);
CalibrationFile parse_calibration(std::string_view text);
CalibrationFile read_calibration(const std::filesystem::path& path);
void write_calibration(const std::filesystem::path& path, const CalibrationFile& file);

/// Every field is optional; missing ones keep the SceneConfig defaults.
std::string serialize_scene_config(const SceneConfig& cfg);
SceneConfig parse_scene_config(std::string_view text);
SceneConfig read_scene_config(const std::filesystem::path& path);

std::string serialize_manifest(const StackManifest& manifest);
StackManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
StackManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const StackManifest& manifest);

std::string serialize_corners(const CornersFile& file);
CornersFile parse_corners(std::string_view text);
CornersFile read_corners(const std::filesystem::path& path);
void write_corners(const std::filesystem::path& path, const CornersFile& file);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace procam
