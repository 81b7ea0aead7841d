#include "hud/cube.hpp"

#include <cmath>
#include <stdexcept>

namespace hud {

void validate_cube(const HsiCube& cube) {
  if (cube.bands < 1 || cube.height < 1 || cube.width < 1)
    throw std::invalid_argument("cube dimensions must be >= 1");
  const std::size_t expect =
      static_cast<std::size_t>(cube.bands) * cube.height * cube.width;
  if (cube.data.size() != expect)
    throw std::invalid_argument("cube payload length does not match dimensions");
  for (const float v : cube.data)
    if (!std::isfinite(v))
      throw std::invalid_argument("cube contains non-finite values");
  if (!cube.band_names.empty() &&
      cube.band_names.size() != static_cast<std::size_t>(cube.bands))
    throw std::invalid_argument("band_names length does not match band count");
}

std::pair<HsiCube, float> normalize(const HsiCube& cube) {
  validate_cube(cube);
  float max = 0.0f;
  for (const float v : cube.data)
    if (v > max) max = v;
  if (max <= 0.0f)
    throw std::invalid_argument("normalize: cube has no strictly positive value");
  HsiCube out = cube;
  for (float& v : out.data) v /= max;
  return {std::move(out), max};
}

}  // namespace hud
