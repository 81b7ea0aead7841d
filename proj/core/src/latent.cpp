#include "hud/latent.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hud {

void validate_abundance(const AbundanceField& x) {
  if (x.d < 1 || x.h < 1 || x.w < 1 ||
      x.data.size() != static_cast<std::size_t>(x.d) * x.h * x.w)
    throw std::invalid_argument("abundance field: bad shape");
  const int n = x.pixel_count();
  std::vector<double> sums(n, 0.0);
  for (int i = 0; i < x.d; ++i) {
    for (int j = 0; j < n; ++j) {
      const float v = x.data[static_cast<std::size_t>(i) * n + j];
      if (!std::isfinite(v))
        throw std::invalid_argument("abundance field: non-finite entry");
      if (v < -1e-9f)
        throw std::invalid_argument("abundance field: negative entry");
      sums[j] += v;
    }
  }
  for (int j = 0; j < n; ++j)
    if (std::abs(sums[j] - 1.0) > 1e-6)
      throw std::invalid_argument("abundance field: pixel sum deviates from one");
}

LatentField to_latent(const AbundanceField& x) {
  validate_abundance(x);
  const double offset = latent_offset(x.d);
  LatentField z(x.d, x.h, x.w);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double v = x.data[i] < 0.0f ? 0.0 : static_cast<double>(x.data[i]);
    z.data[i] = static_cast<float>(std::log(v + offset));
  }
  return z;
}

AbundanceField from_latent(const LatentField& z) {
  if (z.d < 1 || z.h < 1 || z.w < 1 ||
      z.data.size() != static_cast<std::size_t>(z.d) * z.h * z.w)
    throw std::invalid_argument("latent field: bad shape");
  for (const float v : z.data)
    if (!std::isfinite(v))
      throw std::invalid_argument("latent field: non-finite entry");

  AbundanceField x(z.d, z.h, z.w);
  const int n = z.pixel_count();
  for (int j = 0; j < n; ++j) {
    float m = z.data[j];
    for (int i = 1; i < z.d; ++i)
      m = std::max(m, z.data[static_cast<std::size_t>(i) * n + j]);
    double sum = 0.0;
    for (int i = 0; i < z.d; ++i) {
      const double e =
          std::exp(static_cast<double>(z.data[static_cast<std::size_t>(i) * n + j]) - m);
      x.data[static_cast<std::size_t>(i) * n + j] = static_cast<float>(e);
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (int i = 0; i < z.d; ++i)
      x.data[static_cast<std::size_t>(i) * n + j] = static_cast<float>(
          x.data[static_cast<std::size_t>(i) * n + j] * inv);
  }
  return x;
}

}  // namespace hud
