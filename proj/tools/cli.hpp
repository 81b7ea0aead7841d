#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hud::cli {

// Effective configuration of a run; every field is mirrored 1:1 by a flag and
// a `key=value` line in a --config file (flags override the file).
struct RunConfig {
  std::string input;
  std::string out;
  int d = 4;
  std::string mode = "linear";  // linear | fcls
  int patch_size = 32;
  int patch_count = 1024;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int steps = 10000;
  int batch_size = 8;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  int base_width = 32;
  int depth = 2;
  int time_embed_dim = 128;
  int checkpoint_interval = 0;
  bool normalize = true;
};

// Runs one subcommand (unmix, train, sample, eval, export-rgb,
// make-synthetic); returns the process exit code.
int dispatch(const std::vector<std::string>& args);

}  // namespace hud::cli
