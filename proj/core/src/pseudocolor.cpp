#include "hud/pseudocolor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace hud {

namespace {

double percentile(std::vector<float>& sorted_scratch, double p) {
  const std::size_t n = sorted_scratch.size();
  const double pos = p * static_cast<double>(n - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= n) return sorted_scratch[n - 1];
  return sorted_scratch[i] * (1.0 - frac) + sorted_scratch[i + 1] * frac;
}

void stretch_band(const HsiCube& cube, int band, std::vector<std::uint8_t>& out,
                  int channel) {
  const int n = cube.pixel_count();
  std::vector<float> sorted(cube.data.begin() + static_cast<std::size_t>(band) * n,
                            cube.data.begin() + static_cast<std::size_t>(band + 1) * n);
  std::sort(sorted.begin(), sorted.end());
  const double lo = percentile(sorted, 0.02);
  const double hi = percentile(sorted, 0.98);

  const float* src = cube.data.data() + static_cast<std::size_t>(band) * n;
  if (hi <= lo) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i) * 3 + channel] = 128;
    return;
  }
  const double scale = 255.0 / (hi - lo);
  for (int i = 0; i < n; ++i) {
    double v = (static_cast<double>(src[i]) - lo) * scale;
    v = std::clamp(v, 0.0, 255.0);
    out[static_cast<std::size_t>(i) * 3 + channel] =
        static_cast<std::uint8_t>(std::lround(v));
  }
}

}  // namespace

std::vector<std::uint8_t> render_pseudocolor(const HsiCube& cube, int r, int g,
                                             int b) {
  validate_cube(cube);
  for (const int band : {r, g, b})
    if (band < 0 || band >= cube.bands)
      throw std::invalid_argument("render_pseudocolor: band index out of range");

  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(cube.pixel_count()) * 3);
  stretch_band(cube, r, rgb, 0);
  stretch_band(cube, g, rgb, 1);
  stretch_band(cube, b, rgb, 2);
  return rgb;
}

void export_pseudocolor(const HsiCube& cube, int r, int g, int b,
                        const std::filesystem::path& path) {
  const std::vector<std::uint8_t> rgb = render_pseudocolor(cube, r, g, b);

  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(
      std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("export_pseudocolor: cannot open " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("export_pseudocolor: png init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("export_pseudocolor: png init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("export_pseudocolor: png write failed for " +
                             path.string());
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cube.width),
               static_cast<png_uint_32>(cube.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int row = 0; row < cube.height; ++row)
    png_write_row(png, const_cast<png_bytep>(
                           rgb.data() + static_cast<std::size_t>(row) * cube.width * 3));
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

}  // namespace hud
