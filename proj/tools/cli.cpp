#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "hud/checkpoint.hpp"
#include "hud/hsc_io.hpp"
#include "hud/latent.hpp"
#include "hud/metrics.hpp"
#include "hud/patches.hpp"
#include "hud/pseudocolor.hpp"
#include "hud/rng.hpp"
#include "hud/sampler.hpp"
#include "hud/synthetic.hpp"
#include "hud/train.hpp"
#include "hud/unmixing.hpp"

namespace hud::cli {

namespace {

namespace fs = std::filesystem;

EncodeMode parse_mode(const std::string& mode) {
  if (mode == "linear") return EncodeMode::kLinear;
  if (mode == "fcls") return EncodeMode::kFcls;
  throw std::invalid_argument("mode must be 'linear' or 'fcls', got '" + mode + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << text;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

int run_unmix(const RunConfig& rc) {
  require(!rc.input.empty(), "unmix: --input is required");
  require(!rc.out.empty(), "unmix: --out is required");
  const EncodeMode mode = parse_mode(rc.mode);

  HsiCube cube = load_cube(rc.input);
  float scale = 1.0f;
  if (rc.normalize) {
    auto [scaled, s] = normalize(cube);
    cube = std::move(scaled);
    scale = s;
  }

  const EndmemberMatrix endmembers = vca(cube, rc.d, rc.seed);
  const UnmixingAutoencoder uae = make_autoencoder(endmembers);

  FclsDiagnostics diag;
  AbundanceField abundances =
      mode == EncodeMode::kFcls
          ? solve_abundance_fcls(endmembers, cube, 1e-10, 500, &diag)
          : encode(uae, cube, EncodeMode::kLinear);
  const HsiCube reconstructed = decode(uae, abundances);
  const ReconstructionReport rep = reconstruction_report(cube, reconstructed);

  const fs::path out(rc.out);
  fs::create_directories(out / "endmembers");
  fs::create_directories(out / "reports");
  save_endmembers(endmembers, rc.seed, out / "endmembers" / "endmembers.hsc");

  HsiCube abundance_cube(abundances.d, abundances.h, abundances.w);
  abundance_cube.data = abundances.data;
  save_cube(abundance_cube, out / "endmembers" / "abundances.hsc");

  nlohmann::ordered_json j;
  j["input"] = rc.input;
  j["d"] = rc.d;
  j["mode"] = rc.mode;
  j["seed"] = rc.seed;
  j["normalize_scale"] = scale;
  j["rmse"] = rep.rmse;
  j["mean_spectral_angle"] = rep.mean_spectral_angle;
  if (mode == EncodeMode::kFcls) {
    j["fcls_pixels_not_converged"] = diag.pixels_not_converged;
    j["fcls_max_iterations_used"] = diag.max_iterations_used;
  }
  write_text(out / "reports" / "unmix_report.json", j.dump(2) + "\n");

  std::cout << "unmix: d=" << rc.d << " mode=" << rc.mode << " rmse=" << rep.rmse
            << " mean_angle=" << rep.mean_spectral_angle << "\n";
  return 0;
}

int run_train(const RunConfig& rc) {
  require(!rc.input.empty(), "train: --input is required");
  require(!rc.out.empty(), "train: --out is required");
  const EncodeMode mode = parse_mode(rc.mode);

  HsiCube cube = load_cube(rc.input);
  const std::string dataset_hash = hash_cube(cube);
  if (rc.normalize) cube = normalize(cube).first;

  const fs::path out(rc.out);
  const EndmemberMatrix endmembers =
      load_endmembers(out / "endmembers" / "endmembers.hsc");
  require(endmembers.c == cube.bands, "train: endmembers do not match the scene");
  const UnmixingAutoencoder uae = make_autoencoder(endmembers);

  const fs::path ckroot = out / "checkpoints";
  const fs::path final_dir = ckroot / "final";
  if (fs::exists(final_dir / "meta.json")) {
    const Checkpoint existing = load_checkpoint(final_dir);
    if (existing.dataset_hash != dataset_hash)
      throw std::runtime_error(
          "train: checkpoint directory already holds a model for a different "
          "scene (one model per scene); choose another --out");
  }
  fs::create_directories(ckroot);

  const PatchSet patches =
      extract_patches(cube, rc.patch_size, rc.patch_count, mix_seed(rc.seed, 1));

  DenoiserConfig mc;
  mc.channels = endmembers.d;
  mc.base_width = rc.base_width;
  mc.depth = rc.depth;
  mc.time_embed_dim = rc.time_embed_dim;
  Denoiser model(mc, mix_seed(rc.seed, 2));

  TrainConfig tc;
  tc.steps = rc.steps;
  tc.batch_size = rc.batch_size;
  tc.learning_rate = rc.learning_rate;
  tc.seed = rc.seed;
  tc.T = rc.T;
  tc.beta_start = rc.beta_start;
  tc.beta_end = rc.beta_end;
  tc.patch_size = rc.patch_size;
  tc.checkpoint_interval = rc.checkpoint_interval;

  std::ofstream log(ckroot / "train_log.csv", std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("train: cannot open train_log.csv");
  log << "step,loss\n";

  TrainCallbacks cb;
  cb.on_step = [&log](int step, double loss) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d,%.9g\n", step, loss);
    log << buf;
  };
  cb.on_checkpoint = [&](int step, const Denoiser& m) {
    char name[32];
    std::snprintf(name, sizeof(name), "step_%06d", step);
    save_checkpoint(ckroot / name, m, tc.T, tc.beta_start, tc.beta_end, uae, mode,
                    step, rc.seed, rc.input, dataset_hash);
  };

  train(model, patches, uae, tc, mode, cb);
  save_checkpoint(final_dir, model, tc.T, tc.beta_start, tc.beta_end, uae, mode,
                  tc.steps, rc.seed, rc.input, dataset_hash);

  std::cout << "train: " << tc.steps << " steps, checkpoint at "
            << final_dir.string() << "\n";
  return 0;
}

int run_sample(const std::string& checkpoint, int count, int size,
               std::uint64_t seed, const std::string& out_dir) {
  require(!checkpoint.empty(), "sample: --checkpoint is required");
  require(!out_dir.empty(), "sample: --out is required");

  const Checkpoint ck = load_checkpoint(checkpoint);
  const Denoiser model = ck.make_model();
  const NoiseSchedule sched = ck.make_schedule();
  const UnmixingAutoencoder uae = make_autoencoder(ck.endmembers);

  const std::vector<HsiCube> cubes = sample(model, sched, uae, count, size, seed);

  const fs::path out(out_dir);
  fs::create_directories(out / "samples");
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03zu.hsc", i);
    save_cube(cubes[i], out / "samples" / name);
  }
  std::cout << "sample: wrote " << cubes.size() << " cubes to "
            << (out / "samples").string() << "\n";
  return 0;
}

int run_eval(const std::string& real_path, const std::string& generated_dir,
             int block_size, int stride, const std::string& out_dir) {
  require(!real_path.empty(), "eval: --real is required");
  require(!generated_dir.empty(), "eval: --generated is required");
  require(!out_dir.empty(), "eval: --out is required");

  const HsiCube real = load_cube(real_path);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(generated_dir))
    if (e.path().extension() == ".hsc") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  require(!files.empty(), "eval: no .hsc cubes in " + generated_dir);

  std::vector<HsiCube> generated;
  generated.reserve(files.size());
  for (const auto& f : files) generated.push_back(load_cube(f));

  if (block_size == 0)
    block_size = std::min(generated[0].height, generated[0].width);
  if (stride == 0) stride = block_size;

  const MetricsReport rep = metric_report(generated, real, block_size, stride);

  const fs::path out(out_dir);
  fs::create_directories(out / "reports");
  save_report(rep, out / "reports" / "metrics.json");
  std::cout << rep.to_json() << "\n";
  return 0;
}

int run_export_rgb(const std::string& input, const std::vector<int>& bands,
                   const std::string& out_path) {
  require(!input.empty(), "export-rgb: --input is required");
  require(bands.size() == 3, "export-rgb: --bands needs exactly r,g,b");
  require(!out_path.empty(), "export-rgb: --out is required");
  const HsiCube cube = load_cube(input);
  export_pseudocolor(cube, bands[0], bands[1], bands[2], out_path);
  std::cout << "export-rgb: wrote " << out_path << "\n";
  return 0;
}

int run_make_synthetic(const SyntheticConfig& sc, const std::string& out_path,
                       bool save_truth) {
  require(!out_path.empty(), "make-synthetic: --out is required");
  const SyntheticScene scene = make_synthetic(sc);
  save_cube(scene.cube, out_path);
  if (save_truth) {
    fs::path em(out_path);
    em += ".truth-endmembers.hsc";
    save_endmembers(scene.endmembers, sc.seed, em);
    fs::path ab(out_path);
    ab += ".truth-abundances.hsc";
    HsiCube xc(scene.abundances.d, scene.abundances.h, scene.abundances.w);
    xc.data = scene.abundances.data;
    save_cube(xc, ab);
  }
  std::cout << "make-synthetic: wrote " << out_path << " (" << sc.bands << "x"
            << sc.height << "x" << sc.width << ", d=" << sc.d << ")\n";
  return 0;
}

// --config support and a --dump-config that writes the effective key=value
// set and exits; reloading a dump reproduces the same configuration.
std::string* add_config_options(CLI::App* cmd) {
  cmd->set_config("--config", "", "flat key=value configuration file")
      ->check(CLI::ExistingFile);
  auto dump = std::make_shared<std::string>();
  cmd->add_option("--dump-config", *dump,
                  "write the effective configuration to this file and exit")
      ->configurable(false);
  // keep the shared_ptr alive through the app's lifetime
  static std::vector<std::shared_ptr<std::string>> keep;
  keep.push_back(dump);
  return dump.get();
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"hyperspectral image synthesis via diffusion in abundance space"};
  app.require_subcommand(1);

  RunConfig rc;
  int exit_code = 0;

  // unmix
  auto* unmix_cmd = app.add_subcommand(
      "unmix", "extract endmembers (VCA) and solve abundances");
  unmix_cmd->add_option("--input", rc.input, "scene .hsc path");
  unmix_cmd->add_option("--out", rc.out, "output directory");
  unmix_cmd->add_option("--d", rc.d, "endmember count");
  unmix_cmd->add_option("--mode", rc.mode, "abundance solver: linear|fcls");
  unmix_cmd->add_option("--seed", rc.seed, "random seed");
  unmix_cmd->add_flag("--normalize,!--no-normalize", rc.normalize,
                      "divide by the global maximum before unmixing");
  std::string* unmix_dump = add_config_options(unmix_cmd);
  unmix_cmd->callback([&, unmix_dump] {
    if (!unmix_dump->empty()) {
      write_text(*unmix_dump, unmix_cmd->config_to_str(true, false));
      return;
    }
    exit_code = run_unmix(rc);
  });

  // train
  auto* train_cmd =
      app.add_subcommand("train", "train the denoiser on latent abundance patches");
  train_cmd->add_option("--input", rc.input, "scene .hsc path");
  train_cmd->add_option("--out", rc.out, "output directory (same as unmix)");
  train_cmd->add_option("--mode", rc.mode, "abundance encoder: linear|fcls");
  train_cmd->add_option("--patch-size", rc.patch_size, "training crop size");
  train_cmd->add_option("--patch-count", rc.patch_count, "patches in the pool");
  train_cmd->add_option("--T", rc.T, "diffusion steps");
  train_cmd->add_option("--beta-start", rc.beta_start, "first beta");
  train_cmd->add_option("--beta-end", rc.beta_end, "last beta");
  train_cmd->add_option("--steps", rc.steps, "optimization steps");
  train_cmd->add_option("--batch-size", rc.batch_size, "minibatch size");
  train_cmd->add_option("--learning-rate", rc.learning_rate, "learning rate");
  train_cmd->add_option("--seed", rc.seed, "random seed");
  train_cmd->add_option("--base-width", rc.base_width, "denoiser base channels");
  train_cmd->add_option("--depth", rc.depth, "denoiser resolution levels");
  train_cmd->add_option("--time-embed-dim", rc.time_embed_dim,
                        "time embedding width");
  train_cmd->add_option("--checkpoint-interval", rc.checkpoint_interval,
                        "periodic checkpoint every N steps (0 = final only)");
  train_cmd->add_flag("--normalize,!--no-normalize", rc.normalize,
                      "divide by the global maximum before encoding");
  std::string* train_dump = add_config_options(train_cmd);
  train_cmd->callback([&, train_dump] {
    if (!train_dump->empty()) {
      write_text(*train_dump, train_cmd->config_to_str(true, false));
      return;
    }
    exit_code = run_train(rc);
  });

  // sample
  std::string sample_checkpoint;
  int sample_count = 8;
  int sample_size = 32;
  auto* sample_cmd = app.add_subcommand("sample", "generate cubes from a checkpoint");
  sample_cmd->add_option("--checkpoint", sample_checkpoint, "checkpoint directory");
  sample_cmd->add_option("--count", sample_count, "number of cubes");
  sample_cmd->add_option("--size", sample_size, "spatial size of each cube");
  sample_cmd->add_option("--seed", rc.seed, "random seed");
  sample_cmd->add_option("--out", rc.out, "output directory");
  std::string* sample_dump = add_config_options(sample_cmd);
  sample_cmd->callback([&, sample_dump] {
    if (!sample_dump->empty()) {
      write_text(*sample_dump, sample_cmd->config_to_str(true, false));
      return;
    }
    exit_code = run_sample(sample_checkpoint, sample_count, sample_size, rc.seed,
                           rc.out);
  });

  // eval
  std::string eval_real, eval_generated;
  int eval_block_size = 0, eval_stride = 0;
  auto* eval_cmd =
      app.add_subcommand("eval", "point fidelity / block diversity report");
  eval_cmd->add_option("--real", eval_real, "real scene .hsc path");
  eval_cmd->add_option("--generated", eval_generated,
                       "directory of generated .hsc cubes");
  eval_cmd->add_option("--block-size", eval_block_size,
                       "block size (0 = generated image size)");
  eval_cmd->add_option("--stride", eval_stride,
                       "generated-side stride (0 = block size)");
  eval_cmd->add_option("--out", rc.out, "output directory");
  std::string* eval_dump = add_config_options(eval_cmd);
  eval_cmd->callback([&, eval_dump] {
    if (!eval_dump->empty()) {
      write_text(*eval_dump, eval_cmd->config_to_str(true, false));
      return;
    }
    exit_code = run_eval(eval_real, eval_generated, eval_block_size, eval_stride,
                         rc.out);
  });

  // export-rgb
  std::string rgb_input, rgb_out;
  std::vector<int> rgb_bands;
  auto* rgb_cmd = app.add_subcommand("export-rgb", "pseudo-color PNG from 3 bands");
  rgb_cmd->add_option("--input", rgb_input, "scene .hsc path");
  rgb_cmd->add_option("--bands", rgb_bands, "r,g,b band indices")->delimiter(',');
  rgb_cmd->add_option("--out", rgb_out, "output .png path");
  rgb_cmd->callback([&] { exit_code = run_export_rgb(rgb_input, rgb_bands, rgb_out); });

  // make-synthetic
  SyntheticConfig sc;
  std::string synth_out;
  bool save_truth = false;
  auto* synth_cmd =
      app.add_subcommand("make-synthetic", "generate a synthetic test scene");
  synth_cmd->add_option("--out", synth_out, "output .hsc path");
  synth_cmd->add_option("--bands", sc.bands, "band count");
  synth_cmd->add_option("--d", sc.d, "endmember count");
  synth_cmd->add_option("--height", sc.height, "scene height");
  synth_cmd->add_option("--width", sc.width, "scene width");
  synth_cmd->add_option("--seed", sc.seed, "random seed");
  synth_cmd->add_option("--noise", sc.noise_sigma, "additive noise sigma");
  synth_cmd->add_option("--smooth", sc.smooth_sigma, "abundance blur sigma");
  synth_cmd->add_option("--alpha", sc.dirichlet_alpha, "Dirichlet concentration");
  synth_cmd->add_option("--pure", sc.pure_per_endmember,
                        "pure pixels per endmember");
  synth_cmd->add_flag("--save-truth", save_truth,
                      "also write ground-truth endmembers and abundances");
  synth_cmd->callback(
      [&] { exit_code = run_make_synthetic(sc, synth_out, save_truth); });

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("hud");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}  // namespace hud::cli
