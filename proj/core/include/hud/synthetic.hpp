#pragma once

#include <cstdint>

#include "hud/cube.hpp"
#include "hud/fields.hpp"
#include "hud/unmixing.hpp"

namespace hud {

struct SyntheticConfig {
  int bands = 64;
  int d = 4;
  int height = 96;
  int width = 96;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;      // additive Gaussian noise, clamped at zero
  double smooth_sigma = 3.0;     // spatial Gaussian blur of the abundance maps
  double dirichlet_alpha = 0.35;
  int pure_per_endmember = 1;    // pure pixels stamped at seeded positions
};

struct SyntheticScene {
  HsiCube cube;
  EndmemberMatrix endmembers;  // ground truth
  AbundanceField abundances;   // ground truth
};

// Desk-scale stand-in for real scenes: d smooth random spectra (sums of
// Gaussians over the band axis), spatially smoothed per-pixel Dirichlet
// abundances renormalized to the simplex, optional pure pixels and noise.
// The cube is scaled so its global maximum is 1.
SyntheticScene make_synthetic(const SyntheticConfig& cfg);

}  // namespace hud
