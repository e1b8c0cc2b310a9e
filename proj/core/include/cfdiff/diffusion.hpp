#pragma once

#include "cfdiff/image.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

class Denoiser;

// One forward corruption step: sqrt(1 - beta_t) x_{t-1} + sqrt(beta_t) eps.
Image forward_step(const Image& x_prev, int t, const NoiseSchedule& schedule, SeededRng& rng);

struct ForwardMarginal {
  Image x_t;
  Image noise;  // the exact eps_bar_t used, kept as the training target
};

// Closed-form corruption x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
// t = 0 returns (x0, zeros) and consumes no randomness.
ForwardMarginal forward_marginal(const Image& x0, int t, const NoiseSchedule& schedule,
                                 SeededRng& rng);

// mu_hat(x_t, t) = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t).
Image posterior_mean(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& schedule);

// x_{t-1} = mu_hat + sigma_t z. No noise is drawn when sigma_t = 0 or t = 1,
// so deterministic steps leave the rng stream untouched.
Image reverse_step(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& schedule,
                   SeededRng& rng);

// Full ancestral chain from x_T ~ N(0, I) down to the x_0 estimate, with the
// denoiser conditioned on the brain/pathology masks. Output is not clamped.
Image sample(const Denoiser& denoiser, const MaskSet& cond, const NoiseSchedule& schedule,
             SeededRng& rng);

}  // namespace cfdiff
