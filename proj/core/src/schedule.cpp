#include "hud/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hud {

namespace {

void check_shapes(const Field3& a, const Field3& b, const char* op) {
  if (a.d != b.d || a.h != b.h || a.w != b.w)
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

void check_t(int t, const NoiseSchedule& s, const char* op) {
  if (t < 1 || t > s.T)
    throw std::invalid_argument(std::string(op) + ": step t out of [1, T]");
}

}  // namespace

NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("build_schedule: T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw std::invalid_argument(
        "build_schedule: need 0 < beta_start <= beta_end < 1");

  NoiseSchedule s;
  s.T = T;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  s.sigma.resize(T);
  s.beta_tilde.resize(T);
  s.posterior_coef_z0.resize(T);
  s.posterior_coef_zt.resize(T);

  double abar = 1.0;
  for (int i = 0; i < T; ++i) {
    s.beta[i] = T == 1 ? beta_start
                       : beta_start + (beta_end - beta_start) * i / (T - 1);
    s.alpha[i] = 1.0 - s.beta[i];
    abar *= s.alpha[i];
    s.alpha_bar[i] = abar;
  }
  for (int i = 0; i < T; ++i) {
    const int t = i + 1;
    const double abar_prev = s.alpha_bar_prev(t);
    const double one_minus = 1.0 - s.alpha_bar[i];
    s.sigma[i] = std::sqrt(s.beta[i]);
    s.beta_tilde[i] = (1.0 - abar_prev) / one_minus * s.beta[i];
    s.posterior_coef_z0[i] = std::sqrt(abar_prev) * s.beta[i] / one_minus;
    s.posterior_coef_zt[i] = std::sqrt(s.alpha[i]) * (1.0 - abar_prev) / one_minus;
  }
  return s;
}

LatentField q_sample(const LatentField& z0, int t, const LatentField& eps,
                     const NoiseSchedule& s) {
  check_t(t, s, "q_sample");
  check_shapes(z0, eps, "q_sample");
  const double a = std::sqrt(s.alpha_bar[t - 1]);
  const double b = std::sqrt(1.0 - s.alpha_bar[t - 1]);
  LatentField zt(z0.d, z0.h, z0.w);
  for (std::size_t i = 0; i < z0.data.size(); ++i)
    zt.data[i] = static_cast<float>(a * z0.data[i] + b * eps.data[i]);
  return zt;
}

LatentField sample_step(const LatentField& zt, int t, const LatentField& eps_hat,
                        const LatentField& noise, const NoiseSchedule& s) {
  check_t(t, s, "sample_step");
  check_shapes(zt, eps_hat, "sample_step");
  check_shapes(zt, noise, "sample_step");
  const double inv_sqrt_alpha = 1.0 / std::sqrt(s.alpha[t - 1]);
  const double eps_coef = s.beta[t - 1] / std::sqrt(1.0 - s.alpha_bar[t - 1]);
  const double sigma = t == 1 ? 0.0 : s.sigma[t - 1];
  LatentField out(zt.d, zt.h, zt.w);
  for (std::size_t i = 0; i < zt.data.size(); ++i)
    out.data[i] = static_cast<float>(
        inv_sqrt_alpha * (zt.data[i] - eps_coef * eps_hat.data[i]) +
        sigma * noise.data[i]);
  return out;
}

}  // namespace hud
