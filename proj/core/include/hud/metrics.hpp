#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hud/cube.hpp"

namespace hud {

struct MetricsReport {
  double F_p = 0.0;
  double D_b = 0.0;
  double ratio = 0.0;  // D_b / F_p (0 when F_p is 0)
  int block_size = 0;
  long long N_b = 0;             // generated blocks evaluated
  int generated_count = 0;       // cubes
  long long pixel_count = 0;     // generated pixels scored
  long long zero_norm_pixels = 0;  // across generated and real, cosine 0 by convention

  std::string to_json() const;
};

// Mean over all generated pixels of the best cosine match against the real
// pixels. Zero-norm pixels score cosine 0.
double point_fidelity(const std::vector<HsiCube>& generated, const HsiCube& real,
                      long long* zero_norm_pixels = nullptr);

// Generated cubes are tiled at `stride`; each block scans every aligned
// position of the real image (stride 1) and keeps the best mean per-pixel
// cosine; the result averages over generated blocks.
double block_diversity(const std::vector<HsiCube>& generated, const HsiCube& real,
                       int block_size, int stride,
                       long long* n_blocks = nullptr,
                       long long* zero_norm_pixels = nullptr);

MetricsReport metric_report(const std::vector<HsiCube>& generated,
                            const HsiCube& real, int block_size, int stride);

void save_report(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace hud
