#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfdiff/image.hpp"
#include "cfdiff/phantom.hpp"
#include "cfdiff/prior.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

// Conditioning is channel concatenation: (x_t, b, p) for the mask-conditioned
// model, plus two extra channels ((1-m)*x0 and m) for the Palette variant.
struct DenoiserInput {
  const Image* x_t = nullptr;
  const Image* brain = nullptr;
  const Image* pathology = nullptr;
  int t = 0;
  std::vector<const Image*> extra;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Image predict(const DenoiserInput& input) const = 0;
};

// Exact noise estimate from the posterior mean E[x0 | x_t] under the
// per-pixel Gaussian-mixture prior:
//   single component: m* = (mu/s^2 + sqrt(ab) x / (1-ab)) / (1/s^2 + ab/(1-ab))
//   mixture: components weighted by responsibilities under the marginal
//   N(sqrt(ab) mu_k, ab s_k^2 + 1 - ab), computed in log space.
// Then eps_hat = (x_t - sqrt(ab) m*) / sqrt(1 - ab). t = 0 raises
// std::domain_error (division by sqrt(1 - alpha_bar_0) = 0).
Image analytic_epsilon(const DenoiserInput& input, const PixelwiseGaussianPrior& prior,
                       const NoiseSchedule& schedule);

// Bayes-optimal denoiser over the phantom family. Builds the conditional
// prior for the masks it is shown and caches it keyed on the mask bytes, so
// repeated calls within an edit chain cost one prior construction. The cache
// makes instances non-shareable across threads; give each worker its own
// copy. Palette extra channels are accepted and ignored: phantom pixels are
// independent given (b, p), so the known region says nothing about the rest.
class AnalyticDenoiser : public Denoiser {
 public:
  AnalyticDenoiser(PhantomParams params, const NoiseSchedule& schedule);
  Image predict(const DenoiserInput& input) const override;

 private:
  PhantomParams params_;
  const NoiseSchedule* schedule_;
  mutable uint64_t cache_key_ = 0;
  mutable bool cache_valid_ = false;
  mutable PixelwiseGaussianPrior cache_;
};

// Small convolutional noise predictor: three 3x3 same-padding conv layers
// (C -> F -> F -> 1) with SiLU activations and an additive timestep embedding
// (fixed sinusoidal table, learned per-channel projection) after the first
// conv. Works at any image size; trained with hand-rolled backprop.
struct TinyDenoiserWeights {
  int in_channels = 3;
  int hidden_channels = 8;
  int temb_dim = 16;
  int max_timestep = 200;  // embedding table covers t in [0, max_timestep]

  std::vector<double> conv1_w, conv1_b;  // [F][C][3][3], [F]
  std::vector<double> temb_w, temb_b;    // [F][E], [F]
  std::vector<double> conv2_w, conv2_b;  // [F][F][3][3], [F]
  std::vector<double> conv3_w, conv3_b;  // [1][F][3][3], [1]
  std::vector<double> temb_table;        // [(max_timestep+1)][E], fixed, not trained

  static TinyDenoiserWeights init(int in_channels, int hidden_channels, int temb_dim,
                                  int max_timestep, SeededRng& rng);

  // Same shapes as *this, all trainable tensors zero-filled.
  TinyDenoiserWeights zeros_like() const;

  bool same_shape(const TinyDenoiserWeights& other) const;
};

// Named access to the trainable tensors, in a fixed order (used by the
// optimizer, the gradient check and the weight file format).
struct TensorRef {
  const char* name;
  std::vector<double> TinyDenoiserWeights::*member;
};
std::span<const TensorRef> trainable_tensors();

// Deterministic forward pass. Channel count (3 + extras) must match
// weights.in_channels and t must be within the embedding table.
Image tiny_forward(const TinyDenoiserWeights& weights, const DenoiserInput& input);

class TinyDenoiser : public Denoiser {
 public:
  explicit TinyDenoiser(TinyDenoiserWeights weights) : weights_(std::move(weights)) {}
  Image predict(const DenoiserInput& input) const override { return tiny_forward(weights_, input); }
  const TinyDenoiserWeights& weights() const { return weights_; }

 private:
  TinyDenoiserWeights weights_;
};

struct TrainingSample {
  Image x0;
  Image brain;
  Image pathology;
  std::vector<Image> extra;  // Palette channels; empty for the mask-conditioned model
};

// Denoising objective: per item, t ~ U{1..T} and eps_bar via forward_marginal,
// then the mean over batch and pixels of (eps_bar - eps_hat)^2. The draw
// order (t first, then the noise image, item by item) is fixed so that two
// evaluations with equal-seeded rngs see identical targets.
double denoising_loss(const Denoiser& denoiser, const std::vector<TrainingSample>& batch,
                      const NoiseSchedule& schedule, SeededRng& rng);

struct LossAndGrads {
  double loss = 0.0;
  TinyDenoiserWeights grads;  // same shapes as the weights
};

// Loss plus analytic gradients for every trainable tensor, using the same
// target draws as denoising_loss given an equal-seeded rng.
LossAndGrads denoising_loss_and_grads(const TinyDenoiserWeights& weights,
                                      const std::vector<TrainingSample>& batch,
                                      const NoiseSchedule& schedule, SeededRng& rng);

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 16;
  int epochs = 200;
};

struct TrainResult {
  TinyDenoiserWeights weights;
  std::vector<double> epoch_losses;
};

// SGD with momentum on the denoising objective. Raises TrainingError naming
// the epoch if the loss goes non-finite.
TrainResult train(TinyDenoiserWeights weights, const std::vector<TrainingSample>& dataset,
                  const NoiseSchedule& schedule, const OptimizerConfig& optimizer, SeededRng& rng);

// Weight file: magic "CFD1", version u16, shape header, then the tensors as
// little-endian IEEE-754 doubles. Round-trips bit-exactly.
void save_weights(const TinyDenoiserWeights& weights, const std::string& path);
TinyDenoiserWeights load_weights(const std::string& path);

// WeightsShapeError naming both counts unless weights.in_channels == expected.
void expect_channels(const TinyDenoiserWeights& weights, int expected);

}  // namespace cfdiff
