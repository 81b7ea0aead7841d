#pragma once

#include <filesystem>
#include <string>

#include "hud/cube.hpp"

namespace hud {

// HSC storage: a cube at `path` is a pair of files
//   <path>       UTF-8 JSON header {"magic":"HSC1","bands":c,"height":h,
//                "width":w,"dtype":"f32le","layout":"band-major"}
//                plus optional "band_names".
//   <path>.raw   c*h*w IEEE-754 32-bit little-endian floats, band-major.
// Saving the same cube twice produces byte-identical files, and
// load(save(cube)) round-trips bit-for-bit.

std::filesystem::path hsc_payload_path(const std::filesystem::path& header_path);

void save_cube(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_cube(const std::filesystem::path& path);

}  // namespace hud
