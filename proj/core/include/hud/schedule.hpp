#pragma once

#include <vector>

#include "hud/fields.hpp"

namespace hud {

// Linear variance schedule and its derived quantities. All arrays are indexed
// by t-1 for t in [1, T]. alpha_bar_prev uses the convention alpha_bar(0) = 1,
// so the t=1 reverse step collapses onto Z_0.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;       // 1 - beta_t
  std::vector<double> alpha_bar;   // prod_{s<=t} alpha_s
  std::vector<double> sigma;       // sqrt(beta_t)
  std::vector<double> beta_tilde;  // (1 - abar_{t-1}) / (1 - abar_t) * beta_t
  std::vector<double> posterior_coef_z0;  // sqrt(abar_{t-1}) beta_t / (1 - abar_t)
  std::vector<double> posterior_coef_zt;  // sqrt(alpha_t)(1 - abar_{t-1}) / (1 - abar_t)

  double alpha_bar_prev(int t) const { return t <= 1 ? 1.0 : alpha_bar[t - 2]; }
};

// beta linear in t from beta_start to beta_end; requires
// 0 < beta_start <= beta_end < 1 and T >= 1.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end);

// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
LatentField q_sample(const LatentField& z0, int t, const LatentField& eps,
                     const NoiseSchedule& s);

// Z_{t-1} = (Z_t - beta_t/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t)
//           + sigma_t * noise        (noise forced to zero at t = 1)
LatentField sample_step(const LatentField& zt, int t, const LatentField& eps_hat,
                        const LatentField& noise, const NoiseSchedule& s);

}  // namespace hud
