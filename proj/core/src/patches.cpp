#include "hud/patches.hpp"

#include <cstring>
#include <stdexcept>

#include "hud/rng.hpp"

namespace hud {

PatchSet extract_patches(const HsiCube& cube, int size, int count,
                         std::uint64_t seed) {
  validate_cube(cube);
  if (size < 1 || size > cube.height || size > cube.width)
    throw std::invalid_argument("extract_patches: size exceeds cube extent");
  if (count < 1) throw std::invalid_argument("extract_patches: count must be >= 1");

  Rng rng(seed);
  PatchSet set;
  set.patch_size = size;
  set.patches.reserve(count);
  set.source_offsets.reserve(count);

  for (int n = 0; n < count; ++n) {
    const int row = rng.uniform_int(0, cube.height - size);
    const int col = rng.uniform_int(0, cube.width - size);
    HsiCube patch(cube.bands, size, size);
    for (int b = 0; b < cube.bands; ++b)
      for (int r = 0; r < size; ++r)
        std::memcpy(&patch.at(b, r, 0), &cube.at(b, row + r, col),
                    static_cast<std::size_t>(size) * sizeof(float));
    set.patches.push_back(std::move(patch));
    set.source_offsets.emplace_back(row, col);
  }
  return set;
}

}  // namespace hud
