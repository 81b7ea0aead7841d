#include "hud/sampler.hpp"

#include <stdexcept>

#include "hud/latent.hpp"
#include "hud/rng.hpp"
#include "hud/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hud {

std::vector<HsiCube> sample(const Denoiser& model, const NoiseSchedule& s,
                            const UnmixingAutoencoder& uae, int count, int size,
                            std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  if (size < 1 || size % model.config().min_divisor() != 0)
    throw std::invalid_argument("sample: size not divisible by 2^(depth-1)");
  if (model.config().channels != uae.A.d)
    throw std::invalid_argument("sample: model channels != endmember count");

  const int d = uae.A.d;
  std::vector<HsiCube> out(count);

  const int threads = thread_budget();
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(static)
#endif
  for (int img = 0; img < count; ++img) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(img)));
    typename Denoiser::Workspace ws;

    LatentField z(d, size, size);
    for (float& v : z.data) v = rng.normal_f();

    nn::Tensor3<float> zt(d, size, size);
    LatentField eps_hat(d, size, size);
    LatentField noise(d, size, size);
    for (int t = s.T; t >= 1; --t) {
      zt.v = z.data;
      const nn::Tensor3<float> pred = model.forward(zt, t, ws);
      eps_hat.data = pred.v;
      if (t > 1)
        for (float& v : noise.data) v = rng.normal_f();
      else
        std::fill(noise.data.begin(), noise.data.end(), 0.0f);
      z = sample_step(z, t, eps_hat, noise, s);
    }

    const AbundanceField x = from_latent(z);
    out[img] = decode(uae, x);
  }
  (void)threads;
  return out;
}

}  // namespace hud
