#include "hud/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hud {

namespace {

using ordered_json = nlohmann::ordered_json;

void write_f32le(const std::filesystem::path& path, const std::vector<float>& v) {
  static_assert(std::endian::native == std::endian::little,
                "params.bin writer assumes a little-endian host");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!f) throw std::runtime_error("checkpoint: write failed on " + path.string());
}

std::vector<float> read_f32le(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(f.tellg());
  f.seekg(0, std::ios::beg);
  if (bytes % sizeof(float) != 0)
    throw std::runtime_error("checkpoint: params.bin has a partial value");
  std::vector<float> v(bytes / sizeof(float));
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  if (!f) throw std::runtime_error("checkpoint: short read on " + path.string());
  return v;
}

}  // namespace

Denoiser Checkpoint::make_model() const {
  Denoiser model(model_config, model_seed);
  if (model.param_count() != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  model.params() = params;
  return model;
}

void save_checkpoint(const std::filesystem::path& dir, const Denoiser& model,
                     int T, double beta_start, double beta_end,
                     const UnmixingAutoencoder& uae, EncodeMode mode, int step,
                     std::uint64_t seed, const std::string& dataset_path,
                     const std::string& dataset_hash) {
  std::filesystem::create_directories(dir);

  const DenoiserConfig& mc = model.config();
  ordered_json meta;
  meta["format"] = "hud-checkpoint-v1";
  meta["step"] = step;
  meta["seed"] = seed;
  meta["schedule"] = ordered_json{
      {"T", T}, {"beta_start", beta_start}, {"beta_end", beta_end}};
  meta["model"] = ordered_json{{"channels", mc.channels},
                               {"base_width", mc.base_width},
                               {"depth", mc.depth},
                               {"time_embed_dim", mc.time_embed_dim},
                               {"groups", mc.groups},
                               {"channel_mults", mc.channel_mults},
                               {"zero_init_head", mc.zero_init_head},
                               {"init_seed", model.seed()}};
  meta["uae"] = ordered_json{
      {"endmembers", "endmembers.hsc"},
      {"mode", mode == EncodeMode::kFcls ? "fcls" : "linear"},
      {"frozen", uae.frozen}};
  meta["dataset"] =
      ordered_json{{"path", dataset_path}, {"content_hash", dataset_hash}};
  ordered_json layout = ordered_json::array();
  for (const ParamBlock& b : model.layout())
    layout.push_back(ordered_json{{"name", b.name}, {"count", b.n}});
  meta["param_layout"] = layout;

  std::ofstream mf(dir / "meta.json", std::ios::binary | std::ios::trunc);
  if (!mf)
    throw std::runtime_error("checkpoint: cannot open " + (dir / "meta.json").string());
  mf << meta.dump(2) << "\n";

  write_f32le(dir / "params.bin", model.params());
  save_endmembers(uae.A, seed, dir / "endmembers.hsc");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "meta.json", std::ios::binary);
  if (!mf)
    throw std::runtime_error("checkpoint: cannot open " + (dir / "meta.json").string());
  ordered_json meta;
  mf >> meta;
  if (meta.value("format", "") != std::string("hud-checkpoint-v1"))
    throw std::runtime_error("checkpoint: unknown format in " + dir.string());

  Checkpoint ck;
  ck.step = meta.value("step", 0);
  ck.seed = meta.value("seed", 0ULL);
  ck.T = meta["schedule"].value("T", 0);
  ck.beta_start = meta["schedule"].value("beta_start", 0.0);
  ck.beta_end = meta["schedule"].value("beta_end", 0.0);

  const auto& m = meta["model"];
  ck.model_config.channels = m.value("channels", 0);
  ck.model_config.base_width = m.value("base_width", 32);
  ck.model_config.depth = m.value("depth", 2);
  ck.model_config.time_embed_dim = m.value("time_embed_dim", 128);
  ck.model_config.groups = m.value("groups", 8);
  ck.model_config.channel_mults = m.value("channel_mults", std::vector<int>{1, 2, 4});
  ck.model_config.zero_init_head = m.value("zero_init_head", true);
  ck.model_seed = m.value("init_seed", 0ULL);

  ck.mode = meta["uae"].value("mode", "linear") == std::string("fcls")
                ? EncodeMode::kFcls
                : EncodeMode::kLinear;
  ck.dataset_path = meta["dataset"].value("path", "");
  ck.dataset_hash = meta["dataset"].value("content_hash", "");

  ck.params = read_f32le(dir / "params.bin");
  ck.endmembers = load_endmembers(dir / "endmembers.hsc");
  return ck;
}

std::string hash_cube(const HsiCube& cube) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&cube.bands, sizeof(cube.bands));
  mix(&cube.height, sizeof(cube.height));
  mix(&cube.width, sizeof(cube.width));
  mix(cube.data.data(), cube.data.size() * sizeof(float));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace hud
