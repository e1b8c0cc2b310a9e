#pragma once

#include <string>
#include <vector>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/image.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

enum class EditMethod { mededit, naive_repaint, sdedit, palette };

std::string to_string(EditMethod method);
EditMethod edit_method_from_string(const std::string& name);

// Per-method knobs. kernel/resamples drive the repaint family, encoding_ratio
// drives SDEdit; irrelevant fields are ignored by each method.
struct EditConfig {
  EditMethod method = EditMethod::mededit;
  int kernel = 7;               // odd >= 1; 1 means m = p
  int resamples = 4;            // U >= 1
  double encoding_ratio = 0.2;  // in (0, 1]
  StructuringElement element = StructuringElement::square;
  void validate() const;        // ConfigError naming the offending field
};

struct EditResult {
  Image counterfactual;
  Image inpaint_mask;        // m actually used (SDEdit records the brain mask)
  std::vector<Image> trace;  // per-timestep x_{t-1} snapshots when requested
};

// Dilated-mask repaint: m = dilate(p, kernel); for t = T..1 and u = 1..U the
// known region is drawn from q(x_{t-1} | x0), the unknown region comes from
// the mask-conditioned reverse step, the two are blended through m, and for
// u < U (t > 1) the result is re-diffused one step with beta_{t-1}. Pixels
// outside m end bit-equal to x0.
EditResult mededit(const Image& x0, const Image& brain, const Image& pathology,
                   const Denoiser& denoiser, const NoiseSchedule& schedule, int kernel,
                   int resamples, SeededRng& rng, bool record_trace = false,
                   StructuringElement element = StructuringElement::square);

// Same loop with m = p: direct pathology inpainting, no room for indirect
// effects outside p by construction.
EditResult naive_repaint(const Image& x0, const Image& brain, const Image& pathology,
                         const Denoiser& denoiser, const NoiseSchedule& schedule, int resamples,
                         SeededRng& rng, bool record_trace = false);

// Partial forward diffusion to t* = round(encoding_ratio * T), then a
// mask-conditioned reverse chain over the whole image. No blending: the
// entire scan is regenerated.
EditResult sdedit(const Image& x0, const Image& brain, const Image& pathology,
                  const Denoiser& denoiser, const NoiseSchedule& schedule, double encoding_ratio,
                  SeededRng& rng, bool record_trace = false);

// Inpainting conditioned on the known region through two extra denoiser
// channels ((1-m)*x0 and m); one full reverse chain, blended only at the end.
EditResult palette_inpaint(const Image& x0, const Image& brain, const Image& pathology,
                           const Denoiser& palette_denoiser, const NoiseSchedule& schedule,
                           int kernel, SeededRng& rng, bool record_trace = false,
                           StructuringElement element = StructuringElement::square);

// Dispatch on config.method; palette uses config.kernel for its mask.
EditResult run_edit(const EditConfig& config, const Image& x0, const Image& brain,
                    const Image& pathology, const Denoiser& denoiser,
                    const NoiseSchedule& schedule, SeededRng& rng, bool record_trace = false);

}  // namespace cfdiff
