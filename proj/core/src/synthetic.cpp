#include "hud/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hud/rng.hpp"

namespace hud {

namespace {

// Marsaglia-Tsang
double gamma_draw(Rng& rng, double alpha) {
  if (alpha < 1.0) {
    const double u = std::max(rng.uniform(), 1e-300);
    return gamma_draw(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

double spectral_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double cs = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(cs, -1.0, 1.0));
}

Eigen::VectorXd random_spectrum(Rng& rng, int bands) {
  Eigen::VectorXd s = Eigen::VectorXd::Constant(bands, 0.05 + 0.1 * rng.uniform());
  const int bumps = 3 + rng.uniform_int(0, 2);
  for (int g = 0; g < bumps; ++g) {
    const double amp = 0.3 + 0.7 * rng.uniform();
    const double mu = rng.uniform() * (bands - 1);
    const double sig = bands / 20.0 + rng.uniform() * bands / 8.0;
    for (int b = 0; b < bands; ++b)
      s(b) += amp * std::exp(-0.5 * (b - mu) * (b - mu) / (sig * sig));
  }
  return s;
}

// 1-D Gaussian blur along rows or columns with border-renormalized weights;
// identical weights for all channels keep per-pixel sums at one.
void blur_axis(std::vector<double>& plane, int h, int w, double sigma, bool rows) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));

  std::vector<double> out(plane.size());
  const int outer = rows ? h : w;
  const int inner = rows ? w : h;
  for (int o = 0; o < outer; ++o) {
    for (int i = 0; i < inner; ++i) {
      double acc = 0.0, wsum = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int ii = i + k;
        if (ii < 0 || ii >= inner) continue;
        const double kv = kernel[k + radius];
        const int r = rows ? o : ii;
        const int c = rows ? ii : o;
        acc += kv * plane[static_cast<std::size_t>(r) * w + c];
        wsum += kv;
      }
      const int r = rows ? o : i;
      const int c = rows ? i : o;
      out[static_cast<std::size_t>(r) * w + c] = acc / wsum;
    }
  }
  plane.swap(out);
}

}  // namespace

SyntheticScene make_synthetic(const SyntheticConfig& cfg) {
  if (cfg.bands < cfg.d || cfg.d < 2 || cfg.height < 1 || cfg.width < 1)
    throw std::invalid_argument("make_synthetic: invalid dimensions");

  Rng rng(cfg.seed);

  // distinct smooth spectra; redraw any column too close to an earlier one
  Eigen::MatrixXd A(cfg.bands, cfg.d);
  for (int i = 0; i < cfg.d; ++i) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const Eigen::VectorXd s = random_spectrum(rng, cfg.bands);
      bool ok = true;
      for (int j = 0; j < i && ok; ++j)
        if (spectral_angle(s, A.col(j)) < 0.15) ok = false;
      if (ok) {
        A.col(i) = s;
        break;
      }
      if (attempt == 63)
        throw std::runtime_error("make_synthetic: could not draw distinct spectra");
    }
  }

  const int n = cfg.height * cfg.width;
  std::vector<std::vector<double>> x(cfg.d, std::vector<double>(n));
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int i = 0; i < cfg.d; ++i) {
      x[i][j] = gamma_draw(rng, cfg.dirichlet_alpha);
      sum += x[i][j];
    }
    if (sum <= 0.0) {
      for (int i = 0; i < cfg.d; ++i) x[i][j] = 1.0 / cfg.d;
    } else {
      for (int i = 0; i < cfg.d; ++i) x[i][j] /= sum;
    }
  }
  for (int i = 0; i < cfg.d; ++i) {
    blur_axis(x[i], cfg.height, cfg.width, cfg.smooth_sigma, true);
    blur_axis(x[i], cfg.height, cfg.width, cfg.smooth_sigma, false);
  }
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int i = 0; i < cfg.d; ++i) sum += x[i][j];
    for (int i = 0; i < cfg.d; ++i) x[i][j] /= sum;
  }

  for (int i = 0; i < cfg.d; ++i) {
    for (int k = 0; k < cfg.pure_per_endmember; ++k) {
      const int r = rng.uniform_int(0, cfg.height - 1);
      const int c = rng.uniform_int(0, cfg.width - 1);
      const int j = r * cfg.width + c;
      for (int ii = 0; ii < cfg.d; ++ii) x[ii][j] = ii == i ? 1.0 : 0.0;
    }
  }

  HsiCube cube(cfg.bands, cfg.height, cfg.width);
  double max_v = 0.0;
  std::vector<double> y(static_cast<std::size_t>(cfg.bands) * n, 0.0);
  for (int b = 0; b < cfg.bands; ++b) {
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int i = 0; i < cfg.d; ++i) v += A(b, i) * x[i][j];
      if (cfg.noise_sigma > 0.0) v = std::max(0.0, v + cfg.noise_sigma * rng.normal());
      y[static_cast<std::size_t>(b) * n + j] = v;
      max_v = std::max(max_v, v);
    }
  }
  if (max_v <= 0.0) throw std::runtime_error("make_synthetic: degenerate scene");
  for (std::size_t i = 0; i < y.size(); ++i)
    cube.data[i] = static_cast<float>(y[i] / max_v);

  SyntheticScene scene;
  scene.cube = std::move(cube);
  scene.endmembers.c = cfg.bands;
  scene.endmembers.d = cfg.d;
  scene.endmembers.A = A / max_v;
  scene.endmembers.validate();
  scene.abundances = AbundanceField(cfg.d, cfg.height, cfg.width);
  for (int i = 0; i < cfg.d; ++i)
    for (int j = 0; j < n; ++j)
      scene.abundances.data[static_cast<std::size_t>(i) * n + j] =
          static_cast<float>(x[i][j]);
  return scene;
}

}  // namespace hud
