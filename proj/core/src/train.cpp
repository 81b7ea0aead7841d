#include "hud/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hud/rng.hpp"
#include "hud/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hud {

namespace {

// latent fields and tensors share the channel-major layout
nn::Tensor3<float> to_tensor(const LatentField& z) {
  nn::Tensor3<float> t(z.d, z.h, z.w);
  t.v = z.data;
  return t;
}

}  // namespace

template <class S>
S denoise_loss(const UNet<S>& net, const std::vector<nn::Tensor3<S>>& zt,
               const std::vector<int>& ts, const std::vector<nn::Tensor3<S>>& eps,
               S* grad) {
  const int batch = static_cast<int>(zt.size());
  if (batch == 0) throw std::invalid_argument("denoise_loss: empty batch");
  const double denom =
      static_cast<double>(batch) * static_cast<double>(zt[0].size());

  std::vector<double> losses(batch, 0.0);
  std::vector<std::vector<S>> grads;
  if (grad != nullptr)
    grads.assign(batch, std::vector<S>(net.param_count(), S(0)));

  const int threads = thread_budget();
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
  for (int b = 0; b < batch; ++b) {
    typename UNet<S>::Workspace ws;
    const nn::Tensor3<S> pred = net.forward(zt[b], ts[b], ws);
    nn::Tensor3<S> diff(pred.c, pred.h, pred.w);
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = static_cast<double>(pred.v[i]) - eps[b].v[i];
      diff.v[i] = static_cast<S>(2.0 * d / denom);
      sq += d * d;
    }
    losses[b] = sq;
    if (grad != nullptr) net.backward(diff, ws, grads[b].data());
  }
  (void)threads;

  if (grad != nullptr)
    for (int b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < grads[b].size(); ++i) grad[i] += grads[b][i];

  double total = 0.0;
  for (int b = 0; b < batch; ++b) total += losses[b];
  return static_cast<S>(total / denom);
}

template float denoise_loss<float>(const UNet<float>&,
                                   const std::vector<nn::Tensor3<float>>&,
                                   const std::vector<int>&,
                                   const std::vector<nn::Tensor3<float>>&, float*);
template double denoise_loss<double>(const UNet<double>&,
                                     const std::vector<nn::Tensor3<double>>&,
                                     const std::vector<int>&,
                                     const std::vector<nn::Tensor3<double>>&,
                                     double*);

TrainResult train(Denoiser& model, const PatchSet& data,
                  const UnmixingAutoencoder& uae, const TrainConfig& cfg,
                  EncodeMode mode, const TrainCallbacks& callbacks) {
  if (data.patches.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (cfg.batch_size < 1 || cfg.T < 1 || !(cfg.learning_rate > 0.0))
    throw std::invalid_argument("train: invalid config");
  if (data.patch_size % model.config().min_divisor() != 0)
    throw std::invalid_argument("train: patch size not divisible by 2^(depth-1)");
  if (!uae.frozen)
    throw std::invalid_argument("train: the autoencoder must stay frozen");

  const NoiseSchedule sched = build_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
  const int pixels = data.patch_size * data.patch_size;
  const int d = uae.A.d;

  TrainResult result;
  result.log.reserve(cfg.steps);

  // adaptive-moment state
  const std::size_t np = model.param_count();
  std::vector<float> m(np, 0.0f), v(np, 0.0f), grad(np);
  const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  Rng rng(cfg.seed);
  for (int step = 1; step <= cfg.steps; ++step) {
    // all draws happen on the master stream before any parallel work
    std::vector<nn::Tensor3<float>> zt(cfg.batch_size);
    std::vector<nn::Tensor3<float>> eps(cfg.batch_size);
    std::vector<int> ts(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int pick = rng.uniform_int(0, static_cast<int>(data.patches.size()) - 1);
      const AbundanceField x = encode(uae, data.patches[pick], mode);
      const LatentField z0 = to_latent(x);
      ts[b] = rng.uniform_int(1, cfg.T);
      LatentField noise(d, data.patch_size, data.patch_size);
      for (int i = 0; i < d * pixels; ++i) noise.data[i] = rng.normal_f();
      zt[b] = to_tensor(q_sample(z0, ts[b], noise, sched));
      eps[b] = to_tensor(noise);
    }

    std::fill(grad.begin(), grad.end(), 0.0f);
    const float loss = denoise_loss<float>(model, zt, ts, eps, grad.data());
    if (!std::isfinite(loss))
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step) + "; aborting");

    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    float* w = model.params().data();
    for (std::size_t i = 0; i < np; ++i) {
      m[i] = static_cast<float>(beta1 * m[i] + (1.0 - beta1) * grad[i]);
      v[i] = static_cast<float>(beta2 * v[i] +
                                (1.0 - beta2) * static_cast<double>(grad[i]) * grad[i]);
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] = static_cast<float>(w[i] -
                                cfg.learning_rate * mhat / (std::sqrt(vhat) + adam_eps));
    }

    result.log.emplace_back(step, static_cast<double>(loss));
    if (callbacks.on_step) callbacks.on_step(step, loss);
    if (callbacks.on_checkpoint && cfg.checkpoint_interval > 0 &&
        step % cfg.checkpoint_interval == 0)
      callbacks.on_checkpoint(step, model);
  }
  return result;
}

}  // namespace hud
