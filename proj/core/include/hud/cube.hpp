#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace hud {

// Radiance/reflectance cube, band-major: data[b*h*w + row*w + col].
// Band varies slowest, then row, then column.
struct HsiCube {
  int bands = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::vector<std::string> band_names;  // empty or exactly `bands` entries

  HsiCube() = default;
  HsiCube(int c, int h, int w)
      : bands(c), height(h), width(w),
        data(static_cast<std::size_t>(c) * h * w, 0.0f) {}

  std::size_t size() const { return data.size(); }
  int pixel_count() const { return height * width; }

  float& at(int b, int r, int c) {
    return data[(static_cast<std::size_t>(b) * height + r) * width + c];
  }
  const float& at(int b, int r, int c) const {
    return data[(static_cast<std::size_t>(b) * height + r) * width + c];
  }

  bool operator==(const HsiCube&) const = default;
};

// Throws std::invalid_argument if dims are non-positive, the payload length
// does not match, any value is non-finite, or band_names has the wrong length.
void validate_cube(const HsiCube& cube);

// Divides by the global maximum; returns the rescaled cube and that maximum.
// Requires at least one strictly positive value.
std::pair<HsiCube, float> normalize(const HsiCube& cube);

}  // namespace hud
