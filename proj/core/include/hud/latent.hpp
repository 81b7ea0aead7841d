#pragma once

#include <cmath>

#include "hud/fields.hpp"

namespace hud {

// Offset added inside the log so zero abundances stay finite.
inline double latent_offset(int d) { return std::exp(-std::log(static_cast<double>(d)) - 8.0); }

// Z = ln(X + e^{-ln(d)-8}), elementwise. Entries of X below zero (within the
// -1e-9 tolerance) are clamped to zero first.
LatentField to_latent(const AbundanceField& x);

// Per-pixel softmax across channels, max-subtracted. Output is strictly
// positive and sums to one per pixel.
AbundanceField from_latent(const LatentField& z);

}  // namespace hud
