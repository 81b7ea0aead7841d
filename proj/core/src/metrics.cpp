#include "hud/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hud/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hud {

namespace {

// pixel-major unit spectra: v[(r*w + c)*d + band]; zero-norm pixels stay zero
// and score cosine 0 against everything
struct NormPixels {
  int h = 0, w = 0, d = 0;
  std::vector<double> v;
  long long zero_count = 0;

  const double* pix(int r, int c) const {
    return v.data() + (static_cast<std::size_t>(r) * w + c) * d;
  }
  const double* pix(int idx) const {
    return v.data() + static_cast<std::size_t>(idx) * d;
  }
};

NormPixels normalize_pixels(const HsiCube& cube) {
  NormPixels np;
  np.h = cube.height;
  np.w = cube.width;
  np.d = cube.bands;
  const int n = cube.pixel_count();
  np.v.assign(static_cast<std::size_t>(n) * cube.bands, 0.0);
  for (int j = 0; j < n; ++j) {
    double sq = 0.0;
    for (int b = 0; b < cube.bands; ++b) {
      const double x = cube.data[static_cast<std::size_t>(b) * n + j];
      sq += x * x;
    }
    if (sq == 0.0) {
      ++np.zero_count;
      continue;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (int b = 0; b < cube.bands; ++b)
      np.v[static_cast<std::size_t>(j) * cube.bands + b] =
          cube.data[static_cast<std::size_t>(b) * n + j] * inv;
  }
  return np;
}

// plain-order dot so the result is bit-identical to a nested-loop evaluation
double dot_d(const double* a, const double* b, int d) {
  double acc = 0.0;
  for (int i = 0; i < d; ++i) acc += a[i] * b[i];
  return acc;
}

void check_bands(const std::vector<HsiCube>& generated, const HsiCube& real,
                 const char* op) {
  if (generated.empty())
    throw std::invalid_argument(std::string(op) + ": empty generated list");
  for (const HsiCube& g : generated) {
    validate_cube(g);
    if (g.bands != real.bands)
      throw std::invalid_argument(std::string(op) + ": band count mismatch");
  }
  validate_cube(real);
}

}  // namespace

double point_fidelity(const std::vector<HsiCube>& generated, const HsiCube& real,
                      long long* zero_norm_pixels) {
  check_bands(generated, real, "point_fidelity");
  const NormPixels rn = normalize_pixels(real);
  const int nr = real.pixel_count();
  const int d = real.bands;

  double total = 0.0;
  long long pixels = 0;
  long long zeros = rn.zero_count;
  const int threads = thread_budget();
  for (const HsiCube& g : generated) {
    const NormPixels gn = normalize_pixels(g);
    zeros += gn.zero_count;
    const int ng = g.pixel_count();
    std::vector<double> best(ng, 0.0);
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
    for (int j = 0; j < ng; ++j) {
      double m = -2.0;
      const double* gp = gn.pix(j);
      for (int k = 0; k < nr; ++k) {
        const double c = dot_d(gp, rn.pix(k), d);
        if (c > m) m = c;
      }
      best[j] = m;
    }
    for (int j = 0; j < ng; ++j) total += best[j];
    pixels += ng;
  }
  (void)threads;
  if (zero_norm_pixels != nullptr) *zero_norm_pixels = zeros;
  return total / static_cast<double>(pixels);
}

double block_diversity(const std::vector<HsiCube>& generated, const HsiCube& real,
                       int block_size, int stride, long long* n_blocks,
                       long long* zero_norm_pixels) {
  check_bands(generated, real, "block_diversity");
  if (stride < 1) throw std::invalid_argument("block_diversity: stride must be >= 1");
  if (block_size < 1 || block_size > real.height || block_size > real.width)
    throw std::invalid_argument("block_diversity: block exceeds real image");
  for (const HsiCube& g : generated)
    if (block_size > g.height || block_size > g.width)
      throw std::invalid_argument("block_diversity: block exceeds generated image");

  const NormPixels rn = normalize_pixels(real);
  const int d = real.bands;
  const int pos_h = real.height - block_size + 1;
  const int pos_w = real.width - block_size + 1;
  const double inv_bs = 1.0 / (static_cast<double>(block_size) * block_size);

  double total = 0.0;
  long long blocks = 0;
  long long zeros = rn.zero_count;
  const int threads = thread_budget();
  for (const HsiCube& g : generated) {
    const NormPixels gn = normalize_pixels(g);
    zeros += gn.zero_count;
    std::vector<std::pair<int, int>> offsets;
    for (int r = 0; r + block_size <= g.height; r += stride)
      for (int c = 0; c + block_size <= g.width; c += stride)
        offsets.emplace_back(r, c);

    std::vector<double> best(offsets.size(), 0.0);
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
    for (int o = 0; o < static_cast<int>(offsets.size()); ++o) {
      const auto [gr, gc] = offsets[o];
      double m = -2.0;
      for (int rr = 0; rr < pos_h; ++rr) {
        for (int rc = 0; rc < pos_w; ++rc) {
          double acc = 0.0;
          for (int y = 0; y < block_size; ++y)
            for (int x = 0; x < block_size; ++x)
              acc += dot_d(gn.pix(gr + y, gc + x), rn.pix(rr + y, rc + x), d);
          const double mean = acc * inv_bs;
          if (mean > m) m = mean;
        }
      }
      best[o] = m;
    }
    for (const double b : best) total += b;
    blocks += static_cast<long long>(offsets.size());
  }
  (void)threads;
  if (n_blocks != nullptr) *n_blocks = blocks;
  if (zero_norm_pixels != nullptr) *zero_norm_pixels = zeros;
  return total / static_cast<double>(blocks);
}

MetricsReport metric_report(const std::vector<HsiCube>& generated,
                            const HsiCube& real, int block_size, int stride) {
  MetricsReport rep;
  rep.block_size = block_size;
  rep.generated_count = static_cast<int>(generated.size());
  rep.F_p = point_fidelity(generated, real, &rep.zero_norm_pixels);
  rep.D_b = block_diversity(generated, real, block_size, stride, &rep.N_b, nullptr);
  rep.ratio = rep.F_p > 0.0 ? rep.D_b / rep.F_p : 0.0;
  rep.pixel_count = 0;
  for (const HsiCube& g : generated) rep.pixel_count += g.pixel_count();
  return rep;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["F_p"] = F_p;
  j["D_b"] = D_b;
  j["ratio"] = ratio;
  j["block_size"] = block_size;
  j["N_b"] = N_b;
  j["zero_norm_pixels"] = zero_norm_pixels;
  j["generated_count"] = generated_count;
  j["pixel_count"] = pixel_count;
  return j.dump(2);
}

void save_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_report: cannot open " + path.string());
  f << report.to_json() << "\n";
}

}  // namespace hud
