#pragma once

#include <cstddef>
#include <vector>

namespace hud {

// Per-pixel channel field, channel-major: data[i*h*w + j*w + k].
struct Field3 {
  int d = 0;
  int h = 0;
  int w = 0;
  std::vector<float> data;

  Field3() = default;
  Field3(int d_, int h_, int w_)
      : d(d_), h(h_), w(w_), data(static_cast<std::size_t>(d_) * h_ * w_, 0.0f) {}

  std::size_t size() const { return data.size(); }
  int pixel_count() const { return h * w; }

  float& at(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * h + j) * w + k];
  }
  float at(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * h + j) * w + k];
  }
};

// Simplex-constrained mixing weights: entries >= -1e-9, per-pixel sum within
// 1e-6 of one.
struct AbundanceField : Field3 {
  using Field3::Field3;
};

// Unconstrained least-squares weights.
struct CoefficientField : Field3 {
  using Field3::Field3;
};

// Log-projected field the diffusion process operates on.
struct LatentField : Field3 {
  using Field3::Field3;
};

// Checks finiteness, non-negativity (tol 1e-9) and per-pixel unity (tol 1e-6);
// throws std::invalid_argument on violation.
void validate_abundance(const AbundanceField& x);

}  // namespace hud
