#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hud/denoiser.hpp"
#include "hud/latent.hpp"
#include "hud/patches.hpp"
#include "hud/schedule.hpp"
#include "hud/unmixing.hpp"

namespace hud {

struct TrainConfig {
  int steps = 10000;
  int batch_size = 8;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int patch_size = 32;
  int checkpoint_interval = 0;  // 0: only the caller's final checkpoint
};

struct TrainResult {
  std::vector<std::pair<int, double>> log;  // (step, loss), every step
};

struct TrainCallbacks {
  std::function<void(int step, double loss)> on_step;
  std::function<void(int step, const Denoiser& model)> on_checkpoint;
};

// Squared-error noise-prediction loss, averaged over batch and elements.
// When `grad` is non-null the parameter gradient accumulates into it.
// Deterministic: per-sample contributions are reduced in batch order no
// matter how many threads run.
template <class S>
S denoise_loss(const UNet<S>& net, const std::vector<nn::Tensor3<S>>& zt,
               const std::vector<int>& ts, const std::vector<nn::Tensor3<S>>& eps,
               S* grad = nullptr);

// One optimization run: per step draw a minibatch of patches, encode through
// the frozen autoencoder, project to the latent space, corrupt at a uniform
// step, and take an adaptive-moment gradient step on the noise-prediction
// loss. Equal seeds give bitwise-equal parameters regardless of HUD_THREADS.
TrainResult train(Denoiser& model, const PatchSet& data,
                  const UnmixingAutoencoder& uae, const TrainConfig& cfg,
                  EncodeMode mode = EncodeMode::kLinear,
                  const TrainCallbacks& callbacks = {});

extern template float denoise_loss<float>(const UNet<float>&,
                                          const std::vector<nn::Tensor3<float>>&,
                                          const std::vector<int>&,
                                          const std::vector<nn::Tensor3<float>>&,
                                          float*);
extern template double denoise_loss<double>(const UNet<double>&,
                                            const std::vector<nn::Tensor3<double>>&,
                                            const std::vector<int>&,
                                            const std::vector<nn::Tensor3<double>>&,
                                            double*);

}  // namespace hud
