#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hud/cube.hpp"

namespace hud {

struct PatchSet {
  int patch_size = 0;
  std::vector<HsiCube> patches;                    // each bands x s x s
  std::vector<std::pair<int, int>> source_offsets; // (row, col) per patch
};

// `count` square crops of side `size`, offsets uniform over the valid
// positions, drawn with replacement from the seeded generator.
PatchSet extract_patches(const HsiCube& cube, int size, int count,
                         std::uint64_t seed);

}  // namespace hud
