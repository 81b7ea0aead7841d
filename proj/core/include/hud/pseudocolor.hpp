#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hud/cube.hpp"

namespace hud {

// Three bands rendered to interleaved 8-bit RGB (h*w*3). Each band is
// stretched independently: values between its 2% and 98% percentiles
// (linear-interpolation percentiles over the band) map linearly to 0..255,
// the rest clamp. A constant band renders as mid-scale 128.
std::vector<std::uint8_t> render_pseudocolor(const HsiCube& cube, int r, int g,
                                             int b);

// render_pseudocolor written as an 8-bit RGB PNG.
void export_pseudocolor(const HsiCube& cube, int r, int g, int b,
                        const std::filesystem::path& path);

}  // namespace hud
