#pragma once

#include <cstdint>
#include <vector>

#include "hud/cube.hpp"
#include "hud/denoiser.hpp"
#include "hud/schedule.hpp"
#include "hud/unmixing.hpp"

namespace hud {

// Ancestral sampling: Z_T ~ N(0, I), reverse steps T..1 with the model's
// predicted noise, softmax back to abundances, decode through the endmembers.
// Images are generated on independent seed streams, so equal (count, size,
// seed) give identical cubes for any thread count.
std::vector<HsiCube> sample(const Denoiser& model, const NoiseSchedule& s,
                            const UnmixingAutoencoder& uae, int count, int size,
                            std::uint64_t seed);

}  // namespace hud
