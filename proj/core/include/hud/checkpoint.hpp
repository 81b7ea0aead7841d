#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hud/cube.hpp"
#include "hud/denoiser.hpp"
#include "hud/schedule.hpp"
#include "hud/unmixing.hpp"

namespace hud {

// A checkpoint is a directory:
//   meta.json        schedule + model hyperparameters, training step, seed,
//                    encode mode, dataset reference, parameter layout
//   params.bin       all parameters as little-endian f32 in layout order
//   endmembers.hsc   the endmember matrix (+ .raw payload and .json sidecar)
struct Checkpoint {
  DenoiserConfig model_config;
  std::uint64_t model_seed = 0;
  std::vector<float> params;
  int T = 0;
  double beta_start = 0.0, beta_end = 0.0;
  int step = 0;
  std::uint64_t seed = 0;
  EncodeMode mode = EncodeMode::kLinear;
  EndmemberMatrix endmembers;
  std::string dataset_path;
  std::string dataset_hash;

  Denoiser make_model() const;
  NoiseSchedule make_schedule() const { return build_schedule(T, beta_start, beta_end); }
};

void save_checkpoint(const std::filesystem::path& dir, const Denoiser& model,
                     int T, double beta_start, double beta_end,
                     const UnmixingAutoencoder& uae, EncodeMode mode, int step,
                     std::uint64_t seed, const std::string& dataset_path,
                     const std::string& dataset_hash);

Checkpoint load_checkpoint(const std::filesystem::path& dir);

// FNV-1a over the payload bytes, hex string; identifies a dataset so a
// checkpoint tree stays tied to the scene it was trained on.
std::string hash_cube(const HsiCube& cube);

}  // namespace hud
