#include "cfdiff/diffusion.hpp"

#include <cmath>

#include "cfdiff/denoiser.hpp"

namespace cfdiff {

Image forward_step(const Image& x_prev, int t, const NoiseSchedule& schedule, SeededRng& rng) {
  const double b = schedule.beta(t);
  const double keep = std::sqrt(1.0 - b);
  const double add = std::sqrt(b);
  Image out = x_prev;
  for (double& v : out.pixels) v = keep * v + add * rng.next_normal();
  return out;
}

ForwardMarginal forward_marginal(const Image& x0, int t, const NoiseSchedule& schedule,
                                 SeededRng& rng) {
  if (t == 0) {
    return {x0, Image::zeros(x0.height, x0.width)};
  }
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  ForwardMarginal out{x0, rng.normal_image(x0.height, x0.width)};
  for (size_t i = 0; i < out.x_t.pixels.size(); ++i) {
    out.x_t.pixels[i] = signal * x0.pixels[i] + noise * out.noise.pixels[i];
  }
  return out;
}

Image posterior_mean(const Image& x_t, const Image& eps_hat, int t,
                     const NoiseSchedule& schedule) {
  require_same_shape(x_t, eps_hat, "posterior_mean");
  const double b = schedule.beta(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - b);
  const double coeff = b / std::sqrt(1.0 - schedule.alpha_bar(t));
  Image out = x_t;
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = inv_sqrt_alpha * (x_t.pixels[i] - coeff * eps_hat.pixels[i]);
  }
  return out;
}

Image reverse_step(const Image& x_t, const Image& eps_hat, int t, const NoiseSchedule& schedule,
                   SeededRng& rng) {
  Image out = posterior_mean(x_t, eps_hat, t, schedule);
  const double s = schedule.sigma(t);
  if (t > 1 && s > 0.0) {
    for (double& v : out.pixels) v += s * rng.next_normal();
  }
  return out;
}

Image sample(const Denoiser& denoiser, const MaskSet& cond, const NoiseSchedule& schedule,
             SeededRng& rng) {
  Image x = rng.normal_image(cond.brain.height, cond.brain.width);
  for (int t = schedule.steps(); t >= 1; --t) {
    DenoiserInput in;
    in.x_t = &x;
    in.brain = &cond.brain;
    in.pathology = &cond.pathology;
    in.t = t;
    const Image eps_hat = denoiser.predict(in);
    x = reverse_step(x, eps_hat, t, schedule, rng);
  }
  return x;
}

}  // namespace cfdiff
