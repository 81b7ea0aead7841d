#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "hud/cube.hpp"
#include "hud/fields.hpp"
#include "hud/rng.hpp"

namespace testsup {

// scratch directory removed on scope exit
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("hud_test_" + std::to_string(rd()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const {
    return path / name;
  }
};

inline hud::HsiCube random_cube(int c, int h, int w, std::uint64_t seed,
                                float lo = 0.0f, float hi = 1.0f) {
  hud::Rng rng(seed);
  hud::HsiCube cube(c, h, w);
  for (float& v : cube.data)
    v = lo + static_cast<float>(rng.uniform()) * (hi - lo);
  return cube;
}

// random point on the probability simplex per pixel
inline hud::AbundanceField random_abundance(int d, int h, int w,
                                            std::uint64_t seed) {
  hud::Rng rng(seed);
  hud::AbundanceField x(d, h, w);
  const int n = h * w;
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    std::vector<double> e(d);
    for (int i = 0; i < d; ++i) {
      e[i] = -std::log(std::max(rng.uniform(), 1e-300));
      sum += e[i];
    }
    for (int i = 0; i < d; ++i)
      x.data[static_cast<std::size_t>(i) * n + j] = static_cast<float>(e[i] / sum);
  }
  return x;
}

}  // namespace testsup
