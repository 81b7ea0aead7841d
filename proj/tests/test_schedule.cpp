#include <doctest.h>

#include <cmath>

#include "hud/schedule.hpp"
#include "test_support.hpp"

using namespace hud;

TEST_CASE("build_schedule: single step") {
  const NoiseSchedule s = build_schedule(1, 0.5, 0.5);
  CHECK(s.beta[0] == 0.5);
  CHECK(s.alpha[0] == 0.5);
  CHECK(s.alpha_bar[0] == 0.5);
  CHECK(s.sigma[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(s.alpha_bar_prev(1) == 1.0);
}

TEST_CASE("build_schedule: T=1000 cumulative product vs extended precision") {
  const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02);
  long double abar = 1.0L;
  for (int i = 0; i < 1000; ++i) {
    const long double beta = 1e-4L + (0.02L - 1e-4L) * i / 999.0L;
    abar *= 1.0L - beta;
  }
  CHECK(std::abs(static_cast<double>(abar) - s.alpha_bar[999]) <=
        1e-12 * static_cast<double>(abar));
  // the terminal signal retention is of order 4e-5
  CHECK(s.alpha_bar[999] > 1e-5);
  CHECK(s.alpha_bar[999] < 1e-4);
  for (int i = 1; i < 1000; ++i) CHECK(s.alpha_bar[i] < s.alpha_bar[i - 1]);
}

TEST_CASE("build_schedule: rejects out-of-range betas") {
  CHECK_THROWS_AS(build_schedule(10, 1e-4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(0, 1e-4, 0.02), std::invalid_argument);
}

TEST_CASE("posterior mean and epsilon-parameterized mean agree at all t") {
  for (const int T : {10, 100, 1000}) {
    const NoiseSchedule s = build_schedule(T, 1e-4, 0.02);
    Rng rng(T);
    for (int t = 1; t <= T; ++t) {
      for (int trial = 0; trial < 4; ++trial) {
        const double z0 = rng.normal() * 2.0;
        const double zt = rng.normal() * 2.0;
        const double abar = s.alpha_bar[t - 1];
        const double eps = (zt - std::sqrt(abar) * z0) / std::sqrt(1.0 - abar);
        const double mu_posterior =
            s.posterior_coef_z0[t - 1] * z0 + s.posterior_coef_zt[t - 1] * zt;
        const double mu_eps =
            (zt - s.beta[t - 1] / std::sqrt(1.0 - abar) * eps) /
            std::sqrt(s.alpha[t - 1]);
        CHECK(std::abs(mu_posterior - mu_eps) <= 1e-6);
      }
    }
  }
}

TEST_CASE("q_sample: closed-form branches") {
  const NoiseSchedule s = build_schedule(100, 1e-4, 0.02);
  Rng rng(7);
  LatentField z0(3, 4, 4), zero(3, 4, 4), eps(3, 4, 4);
  for (float& v : z0.data) v = rng.normal_f();
  for (float& v : eps.data) v = rng.normal_f();

  const int t = 37;
  const double a = std::sqrt(s.alpha_bar[t - 1]);
  const double b = std::sqrt(1.0 - s.alpha_bar[t - 1]);

  const LatentField noiseless = q_sample(z0, t, zero, s);
  for (std::size_t i = 0; i < z0.data.size(); ++i)
    CHECK(noiseless.data[i] == doctest::Approx(a * z0.data[i]).epsilon(1e-7));

  const LatentField signal_free = q_sample(zero, t, eps, s);
  for (std::size_t i = 0; i < eps.data.size(); ++i)
    CHECK(signal_free.data[i] == doctest::Approx(b * eps.data[i]).epsilon(1e-7));
}

TEST_CASE("q_sample: Monte Carlo moments match the marginal law") {
  const NoiseSchedule s = build_schedule(100, 1e-4, 0.02);
  const int t = 60;
  const double z0v = 1.37;
  const double abar = s.alpha_bar[t - 1];

  Rng rng(99);
  LatentField z0(1, 1, 1), eps(1, 1, 1);
  z0.data[0] = static_cast<float>(z0v);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    eps.data[0] = rng.normal_f();
    const double v = q_sample(z0, t, eps, s).data[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const double se = std::sqrt((1.0 - abar) / n);
  CHECK(std::abs(mean - std::sqrt(abar) * z0v) <= 4.0 * se);
  CHECK(std::abs(var - (1.0 - abar)) <= 0.05 * (1.0 - abar));
}

TEST_CASE("q_sample and sample_step validate t and shapes") {
  const NoiseSchedule s = build_schedule(10, 1e-4, 0.02);
  LatentField z(2, 2, 2), bad(3, 2, 2);
  CHECK_THROWS_AS(q_sample(z, 0, z, s), std::invalid_argument);
  CHECK_THROWS_AS(q_sample(z, 11, z, s), std::invalid_argument);
  CHECK_THROWS_AS(q_sample(z, 5, bad, s), std::invalid_argument);
  CHECK_THROWS_AS(sample_step(z, 0, z, z, s), std::invalid_argument);
  CHECK_THROWS_AS(sample_step(z, 5, bad, z, s), std::invalid_argument);
  CHECK_THROWS_AS(sample_step(z, 5, z, bad, s), std::invalid_argument);
}

TEST_CASE("sample_step: zero prediction and zero noise reduce to the formula") {
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.03);
  Rng rng(3);
  LatentField zt(2, 3, 3), zero(2, 3, 3);
  for (float& v : zt.data) v = rng.normal_f();
  const int t = 20;
  const LatentField out = sample_step(zt, t, zero, zero, s);
  for (std::size_t i = 0; i < zt.data.size(); ++i)
    CHECK(out.data[i] ==
          doctest::Approx(zt.data[i] / std::sqrt(s.alpha[t - 1])).epsilon(1e-7));
}

TEST_CASE("sample_step: noise is ignored at the final step") {
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.03);
  Rng rng(5);
  LatentField zt(2, 2, 2), zero(2, 2, 2), eps_hat(2, 2, 2), noise(2, 2, 2);
  for (float& v : zt.data) v = rng.normal_f();
  for (float& v : eps_hat.data) v = rng.normal_f();
  for (float& v : noise.data) v = rng.normal_f() * 100.0f;
  const LatentField with_noise = sample_step(zt, 1, eps_hat, noise, s);
  const LatentField without = sample_step(zt, 1, eps_hat, zero, s);
  CHECK(with_noise.data == without.data);
}

TEST_CASE("sample_step: the point-mass oracle denoiser recovers Z0") {
  const int T = 100;
  const NoiseSchedule s = build_schedule(T, 1e-4, 0.02);
  Rng rng(11);
  LatentField z_true(3, 4, 4), zero(3, 4, 4);
  for (float& v : z_true.data) v = rng.normal_f() * 1.5f;

  LatentField z(3, 4, 4);
  for (float& v : z.data) v = rng.normal_f();

  // independently recurse the displayed posterior mean as the oracle
  std::vector<double> z_ref(z.data.begin(), z.data.end());

  for (int t = T; t >= 1; --t) {
    LatentField eps_hat(3, 4, 4);
    const double abar = s.alpha_bar[t - 1];
    for (std::size_t i = 0; i < z.data.size(); ++i)
      eps_hat.data[i] = static_cast<float>(
          (z.data[i] - std::sqrt(abar) * z_true.data[i]) / std::sqrt(1.0 - abar));
    z = sample_step(z, t, eps_hat, zero, s);

    for (std::size_t i = 0; i < z_ref.size(); ++i)
      z_ref[i] = s.posterior_coef_z0[t - 1] * z_true.data[i] +
                 s.posterior_coef_zt[t - 1] * z_ref[i];
    // the two routes stay within float round-off of each other
    for (std::size_t i = 0; i < z_ref.size(); ++i)
      CHECK(std::abs(z.data[i] - z_ref[i]) <= 1e-4);
  }
  for (std::size_t i = 0; i < z.data.size(); ++i)
    CHECK(z.data[i] == doctest::Approx(z_true.data[i]).epsilon(1e-4));
}
