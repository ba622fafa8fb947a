#pragma once

#include <filesystem>

#include "procam/structured_light.hpp"

namespace procam {

/// Binary PGM (P5, maxval ≤ 255). Throws Io on any read/parse failure.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace procam
