#include "cfdiff/editing.hpp"

#include <cmath>
#include <stdexcept>

#include "cfdiff/diffusion.hpp"
#include "cfdiff/errors.hpp"

namespace cfdiff {

std::string to_string(EditMethod method) {
  switch (method) {
    case EditMethod::mededit: return "mededit";
    case EditMethod::naive_repaint: return "naive_repaint";
    case EditMethod::sdedit: return "sdedit";
    case EditMethod::palette: return "palette";
  }
  return "unknown";
}

EditMethod edit_method_from_string(const std::string& name) {
  if (name == "mededit") return EditMethod::mededit;
  if (name == "naive_repaint") return EditMethod::naive_repaint;
  if (name == "sdedit") return EditMethod::sdedit;
  if (name == "palette") return EditMethod::palette;
  throw ConfigError("unknown edit method '" + name + "'");
}

void EditConfig::validate() const {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("edit kernel k = " + std::to_string(kernel) + " must be odd and >= 1");
  }
  if (resamples < 1) {
    throw ConfigError("resample count U = " + std::to_string(resamples) + " must be >= 1");
  }
  if (!(encoding_ratio > 0.0) || encoding_ratio > 1.0) {
    throw ConfigError("encoding ratio " + std::to_string(encoding_ratio) +
                      " must be in (0, 1]");
  }
}

namespace {

void check_edit_masks(const Image& x0, const Image& brain, const Image& pathology) {
  require_same_shape(x0, brain, "edit");
  require_same_shape(x0, pathology, "edit");
  require_binary(brain, "edit");
  require_binary(pathology, "edit");
  for (size_t i = 0; i < pathology.pixels.size(); ++i) {
    if (pathology.pixels[i] != 0.0 && brain.pixels[i] == 0.0) {
      throw MaskError("edit: pathology mask is not a subset of the brain mask");
    }
  }
}

// Shared MedEdit / naive-RePaint loop for a fixed inpaint mask m.
EditResult repaint_with_mask(const Image& x0, const Image& brain, const Image& pathology,
                             Image m, const Denoiser& denoiser, const NoiseSchedule& schedule,
                             int resamples, SeededRng& rng, bool record_trace) {
  if (resamples < 1) {
    throw ConfigError("resample count U = " + std::to_string(resamples) + " must be >= 1");
  }
  const int T = schedule.steps();
  EditResult result;

  Image x = rng.normal_image(x0.height, x0.width);
  Image known(x0.height, x0.width);
  for (int t = T; t >= 1; --t) {
    Image x_prev;
    for (int u = 1; u <= resamples; ++u) {
      // Known region from q(x_{t-1} | x0); eps = 0 on the final step, which
      // pins pixels outside m to x0 exactly (alpha_bar_0 = 1).
      const double ab_prev = schedule.alpha_bar(t - 1);
      const double signal = std::sqrt(ab_prev);
      const double noise = std::sqrt(1.0 - ab_prev);
      if (t > 1) {
        for (size_t i = 0; i < known.pixels.size(); ++i) {
          known.pixels[i] = signal * x0.pixels[i] + noise * rng.next_normal();
        }
      } else {
        known.pixels = x0.pixels;
      }

      DenoiserInput in;
      in.x_t = &x;
      in.brain = &brain;
      in.pathology = &pathology;
      in.t = t;
      const Image eps_hat = denoiser.predict(in);
      const Image unknown = reverse_step(x, eps_hat, t, schedule, rng);

      x_prev = blend_masked(known, unknown, m);

      // x_t is only rewritten by the harmonizing jump (beta_{t-1} exactly);
      // otherwise the next resampling pass sees the same x_t.
      if (u < resamples && t > 1) {
        const double b = schedule.beta(t - 1);
        const double keep = std::sqrt(1.0 - b);
        const double add = std::sqrt(b);
        for (size_t i = 0; i < x.pixels.size(); ++i) {
          x.pixels[i] = keep * x_prev.pixels[i] + add * rng.next_normal();
        }
      }
    }
    x = std::move(x_prev);  // the blend at level t-1 is the next x_t
    if (record_trace) result.trace.push_back(x);
  }
  result.counterfactual = std::move(x);
  result.inpaint_mask = std::move(m);
  return result;
}

}  // namespace

EditResult mededit(const Image& x0, const Image& brain, const Image& pathology,
                   const Denoiser& denoiser, const NoiseSchedule& schedule, int kernel,
                   int resamples, SeededRng& rng, bool record_trace,
                   StructuringElement element) {
  check_edit_masks(x0, brain, pathology);
  Image m = dilate(pathology, kernel, element);
  return repaint_with_mask(x0, brain, pathology, std::move(m), denoiser, schedule, resamples,
                           rng, record_trace);
}

EditResult naive_repaint(const Image& x0, const Image& brain, const Image& pathology,
                         const Denoiser& denoiser, const NoiseSchedule& schedule, int resamples,
                         SeededRng& rng, bool record_trace) {
  check_edit_masks(x0, brain, pathology);
  return repaint_with_mask(x0, brain, pathology, pathology, denoiser, schedule, resamples, rng,
                           record_trace);
}

EditResult sdedit(const Image& x0, const Image& brain, const Image& pathology,
                  const Denoiser& denoiser, const NoiseSchedule& schedule, double encoding_ratio,
                  SeededRng& rng, bool record_trace) {
  check_edit_masks(x0, brain, pathology);
  if (!(encoding_ratio > 0.0) || encoding_ratio > 1.0) {
    throw ConfigError("encoding ratio " + std::to_string(encoding_ratio) +
                      " must be in (0, 1]");
  }
  EditResult result;
  result.inpaint_mask = brain;  // nothing is preserved; recorded for symmetry

  const int t_star = static_cast<int>(std::lround(encoding_ratio * schedule.steps()));
  if (t_star == 0) {
    result.counterfactual = x0;
    return result;
  }
  Image x = forward_marginal(x0, t_star, schedule, rng).x_t;
  for (int t = t_star; t >= 1; --t) {
    DenoiserInput in;
    in.x_t = &x;
    in.brain = &brain;
    in.pathology = &pathology;
    in.t = t;
    const Image eps_hat = denoiser.predict(in);
    x = reverse_step(x, eps_hat, t, schedule, rng);
    if (record_trace) result.trace.push_back(x);
  }
  result.counterfactual = std::move(x);
  return result;
}

EditResult palette_inpaint(const Image& x0, const Image& brain, const Image& pathology,
                           const Denoiser& palette_denoiser, const NoiseSchedule& schedule,
                           int kernel, SeededRng& rng, bool record_trace,
                           StructuringElement element) {
  check_edit_masks(x0, brain, pathology);
  Image m = dilate(pathology, kernel, element);
  Image known_region = x0;
  for (size_t i = 0; i < known_region.pixels.size(); ++i) {
    if (m.pixels[i] != 0.0) known_region.pixels[i] = 0.0;
  }

  EditResult result;
  Image x = rng.normal_image(x0.height, x0.width);
  for (int t = schedule.steps(); t >= 1; --t) {
    DenoiserInput in;
    in.x_t = &x;
    in.brain = &brain;
    in.pathology = &pathology;
    in.t = t;
    in.extra = {&known_region, &m};
    const Image eps_hat = palette_denoiser.predict(in);
    x = reverse_step(x, eps_hat, t, schedule, rng);
    if (record_trace) result.trace.push_back(x);
  }
  result.counterfactual = blend_masked(x0, x, m);
  result.inpaint_mask = std::move(m);
  return result;
}

EditResult run_edit(const EditConfig& config, const Image& x0, const Image& brain,
                    const Image& pathology, const Denoiser& denoiser,
                    const NoiseSchedule& schedule, SeededRng& rng, bool record_trace) {
  config.validate();
  switch (config.method) {
    case EditMethod::mededit:
      return mededit(x0, brain, pathology, denoiser, schedule, config.kernel, config.resamples,
                     rng, record_trace, config.element);
    case EditMethod::naive_repaint:
      return naive_repaint(x0, brain, pathology, denoiser, schedule, config.resamples, rng,
                           record_trace);
    case EditMethod::sdedit:
      return sdedit(x0, brain, pathology, denoiser, schedule, config.encoding_ratio, rng,
                    record_trace);
    case EditMethod::palette:
      return palette_inpaint(x0, brain, pathology, denoiser, schedule, config.kernel, rng,
                             record_trace, config.element);
  }
  throw std::logic_error("run_edit: unhandled method");
}

}  // namespace cfdiff
