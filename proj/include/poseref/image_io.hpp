#pragma once

#include <filesystem>

#include "poseref/raster.hpp"

namespace poseref {

// Debug dumps as binary PGM. The value scaling is documented in a comment
// line inside each file header.
//
// Masks are 8-bit (foreground 255). Depth maps and distance fields are
// 16-bit: foreground values scale linearly to 1..65535 and background (or
// for distance fields nothing) maps to 0.
void write_pgm(const SilhouetteMask& mask, const std::filesystem::path& path);
void write_pgm(const DepthMap& depth, const std::filesystem::path& path);
void write_pgm(const DistanceField& field, const std::filesystem::path& path);

// Reads an 8- or 16-bit PGM (P2 or P5); pixels above half of maxval are
// foreground.
SilhouetteMask read_pgm_mask(const std::filesystem::path& path);

}  // namespace poseref
