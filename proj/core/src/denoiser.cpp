#include "cfdiff/denoiser.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "cfdiff/diffusion.hpp"
#include "cfdiff/errors.hpp"

namespace cfdiff {

// ---------------------------------------------------------------------------
// Analytic (Bayes-optimal) denoiser
// ---------------------------------------------------------------------------

Image analytic_epsilon(const DenoiserInput& input, const PixelwiseGaussianPrior& prior,
                       const NoiseSchedule& schedule) {
  if (input.x_t == nullptr) {
    throw std::invalid_argument("analytic_epsilon: missing x_t");
  }
  if (input.t == 0) {
    throw std::domain_error("analytic_epsilon: t = 0 (alpha_bar = 1 leaves eps undefined)");
  }
  if (input.t < 1 || input.t > schedule.steps()) {
    throw std::out_of_range("analytic_epsilon: t = " + std::to_string(input.t) +
                            " outside [1, " + std::to_string(schedule.steps()) + "]");
  }
  const Image& x = *input.x_t;
  if (x.height != prior.height || x.width != prior.width) {
    throw ShapeError("analytic_epsilon: x_t shape does not match the prior");
  }

  const double ab = schedule.alpha_bar(input.t);
  const double sab = std::sqrt(ab);
  const double om = 1.0 - ab;
  const double inv_som = 1.0 / std::sqrt(om);

  Image eps(x.height, x.width);
  std::array<double, 8> logr;
  for (size_t i = 0; i < x.pixels.size(); ++i) {
    const double xt = x.pixels[i];
    const int lo = prior.offset[i];
    const int hi = prior.offset[i + 1];
    double m_star;
    if (hi - lo == 1) {
      const double s2 = prior.stddev[lo] * prior.stddev[lo];
      // (mu/s^2 + sab x/om) / (1/s^2 + ab/om), rescaled so s = 0 is exact.
      m_star = (prior.mean[lo] * om + sab * s2 * xt) / (om + ab * s2);
    } else {
      const int k = hi - lo;
      if (k > static_cast<int>(logr.size())) {
        throw std::invalid_argument("analytic_epsilon: more than 8 mixture components");
      }
      double max_log = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double s2 = prior.stddev[lo + c] * prior.stddev[lo + c];
        const double v = ab * s2 + om;  // marginal variance of x_t under component c
        const double d = xt - sab * prior.mean[lo + c];
        const double lw = prior.weight[lo + c] > 0.0
                              ? std::log(prior.weight[lo + c])
                              : -std::numeric_limits<double>::infinity();
        logr[c] = lw - 0.5 * std::log(v) - d * d / (2.0 * v);
        max_log = std::max(max_log, logr[c]);
      }
      double norm = 0.0;
      m_star = 0.0;
      for (int c = 0; c < k; ++c) {
        const double r = std::exp(logr[c] - max_log);
        const double s2 = prior.stddev[lo + c] * prior.stddev[lo + c];
        const double mk = (prior.mean[lo + c] * om + sab * s2 * xt) / (om + ab * s2);
        m_star += r * mk;
        norm += r;
      }
      m_star /= norm;
    }
    eps.pixels[i] = (xt - sab * m_star) * inv_som;
  }
  return eps;
}

namespace {

uint64_t fnv1a_image(uint64_t h, const Image& img) {
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (i * 8)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<uint64_t>(img.height));
  mix(static_cast<uint64_t>(img.width));
  for (double p : img.pixels) mix(std::bit_cast<uint64_t>(p));
  return h;
}

}  // namespace

AnalyticDenoiser::AnalyticDenoiser(PhantomParams params, const NoiseSchedule& schedule)
    : params_(std::move(params)), schedule_(&schedule) {
  params_.validate();
}

Image AnalyticDenoiser::predict(const DenoiserInput& input) const {
  if (input.brain == nullptr || input.pathology == nullptr) {
    throw std::invalid_argument("AnalyticDenoiser: missing conditioning masks");
  }
  uint64_t key = fnv1a_image(1469598103934665603ULL, *input.brain);
  key = fnv1a_image(key, *input.pathology);
  if (!cache_valid_ || key != cache_key_) {
    cache_ = conditional_prior(*input.brain, *input.pathology, params_);
    cache_key_ = key;
    cache_valid_ = true;
  }
  return analytic_epsilon(input, cache_, *schedule_);
}

// ---------------------------------------------------------------------------
// Tiny trainable denoiser
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<TensorRef, 8> kTrainable = {{
    {"conv1_w", &TinyDenoiserWeights::conv1_w},
    {"conv1_b", &TinyDenoiserWeights::conv1_b},
    {"temb_w", &TinyDenoiserWeights::temb_w},
    {"temb_b", &TinyDenoiserWeights::temb_b},
    {"conv2_w", &TinyDenoiserWeights::conv2_w},
    {"conv2_b", &TinyDenoiserWeights::conv2_b},
    {"conv3_w", &TinyDenoiserWeights::conv3_w},
    {"conv3_b", &TinyDenoiserWeights::conv3_b},
}};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// Same-padding 3x3 correlation; maps [C][H][W] -> [F][H][W].
void conv3x3_forward(const double* in, int in_channels, int height, int width, const double* w,
                     const double* b, int out_channels, double* out) {
  const size_t plane = static_cast<size_t>(height) * width;
  for (int f = 0; f < out_channels; ++f) {
    double* of = out + f * plane;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double acc = b[f];
        for (int c = 0; c < in_channels; ++c) {
          const double* ic = in + c * plane;
          const double* wk = w + (static_cast<size_t>(f) * in_channels + c) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= width) continue;
              acc += wk[ky * 3 + kx] * ic[yy * width + xx];
            }
          }
        }
        of[y * width + x] = acc;
      }
    }
  }
}

// Accumulates parameter gradients and (optionally) the input gradient.
void conv3x3_backward(const double* g_out, int out_channels, int height, int width,
                      const double* w, const double* in, int in_channels, double* g_in,
                      double* g_w, double* g_b) {
  const size_t plane = static_cast<size_t>(height) * width;
  for (int f = 0; f < out_channels; ++f) {
    const double* gf = g_out + f * plane;
    double gb = 0.0;
    for (size_t i = 0; i < plane; ++i) gb += gf[i];
    g_b[f] += gb;
    for (int c = 0; c < in_channels; ++c) {
      const double* ic = in + c * plane;
      const double* wk = w + (static_cast<size_t>(f) * in_channels + c) * 9;
      double* gwk = g_w + (static_cast<size_t>(f) * in_channels + c) * 9;
      double* gic = g_in ? g_in + c * plane : nullptr;
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const double g = gf[y * width + x];
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= width) continue;
              gwk[ky * 3 + kx] += g * ic[yy * width + xx];
              if (gic) gic[yy * width + xx] += g * wk[ky * 3 + kx];
            }
          }
        }
      }
    }
  }
}

struct ForwardCache {
  int height = 0, width = 0, t = 0;
  std::vector<double> input;    // [C][H][W]
  std::vector<double> z1, a1;   // [F][H][W]
  std::vector<double> z2, a2;   // [F][H][W]
  std::vector<double> out;      // [H][W]
};

void gather_channels(const TinyDenoiserWeights& w, const DenoiserInput& input,
                     ForwardCache& cache) {
  if (input.x_t == nullptr || input.brain == nullptr || input.pathology == nullptr) {
    throw std::invalid_argument("tiny_forward: missing input channels");
  }
  std::vector<const Image*> chans{input.x_t, input.brain, input.pathology};
  for (const Image* e : input.extra) chans.push_back(e);
  if (static_cast<int>(chans.size()) != w.in_channels) {
    throw ShapeError("tiny_forward: weights expect " + std::to_string(w.in_channels) +
                     " input channels, got " + std::to_string(chans.size()));
  }
  if (input.t < 0 || input.t > w.max_timestep) {
    throw std::out_of_range("tiny_forward: t = " + std::to_string(input.t) +
                            " outside the embedding table [0, " +
                            std::to_string(w.max_timestep) + "]");
  }
  cache.height = input.x_t->height;
  cache.width = input.x_t->width;
  cache.t = input.t;
  const size_t plane = input.x_t->pixels.size();
  cache.input.resize(plane * chans.size());
  for (size_t c = 0; c < chans.size(); ++c) {
    require_same_shape(*input.x_t, *chans[c], "tiny_forward");
    std::copy(chans[c]->pixels.begin(), chans[c]->pixels.end(), cache.input.begin() + c * plane);
  }
}

void tiny_forward_cached(const TinyDenoiserWeights& w, const DenoiserInput& input,
                         ForwardCache& cache) {
  gather_channels(w, input, cache);
  const int H = cache.height, W = cache.width;
  const int F = w.hidden_channels;
  const size_t plane = static_cast<size_t>(H) * W;

  cache.z1.assign(plane * F, 0.0);
  conv3x3_forward(cache.input.data(), w.in_channels, H, W, w.conv1_w.data(), w.conv1_b.data(), F,
                  cache.z1.data());
  const double* trow = w.temb_table.data() + static_cast<size_t>(cache.t) * w.temb_dim;
  for (int f = 0; f < F; ++f) {
    double add = w.temb_b[f];
    for (int e = 0; e < w.temb_dim; ++e) add += w.temb_w[static_cast<size_t>(f) * w.temb_dim + e] * trow[e];
    double* zf = cache.z1.data() + f * plane;
    for (size_t i = 0; i < plane; ++i) zf[i] += add;
  }
  cache.a1.resize(cache.z1.size());
  for (size_t i = 0; i < cache.z1.size(); ++i) cache.a1[i] = silu(cache.z1[i]);

  cache.z2.assign(plane * F, 0.0);
  conv3x3_forward(cache.a1.data(), F, H, W, w.conv2_w.data(), w.conv2_b.data(), F,
                  cache.z2.data());
  cache.a2.resize(cache.z2.size());
  for (size_t i = 0; i < cache.z2.size(); ++i) cache.a2[i] = silu(cache.z2[i]);

  cache.out.assign(plane, 0.0);
  conv3x3_forward(cache.a2.data(), F, H, W, w.conv3_w.data(), w.conv3_b.data(), 1,
                  cache.out.data());
}

// Backpropagates dL/d(out) through the cached forward pass into grads.
void tiny_backward(const TinyDenoiserWeights& w, const ForwardCache& cache,
                   const std::vector<double>& g_out, TinyDenoiserWeights& grads) {
  const int H = cache.height, W = cache.width;
  const int F = w.hidden_channels;
  const size_t plane = static_cast<size_t>(H) * W;

  std::vector<double> g_a2(plane * F, 0.0);
  conv3x3_backward(g_out.data(), 1, H, W, w.conv3_w.data(), cache.a2.data(), F, g_a2.data(),
                   grads.conv3_w.data(), grads.conv3_b.data());

  std::vector<double> g_z2(plane * F);
  for (size_t i = 0; i < g_z2.size(); ++i) g_z2[i] = g_a2[i] * silu_grad(cache.z2[i]);

  std::vector<double> g_a1(plane * F, 0.0);
  conv3x3_backward(g_z2.data(), F, H, W, w.conv2_w.data(), cache.a1.data(), F, g_a1.data(),
                   grads.conv2_w.data(), grads.conv2_b.data());

  std::vector<double> g_z1(plane * F);
  for (size_t i = 0; i < g_z1.size(); ++i) g_z1[i] = g_a1[i] * silu_grad(cache.z1[i]);

  conv3x3_backward(g_z1.data(), F, H, W, w.conv1_w.data(), cache.input.data(), w.in_channels,
                   nullptr, grads.conv1_w.data(), grads.conv1_b.data());

  // The timestep embedding adds a per-channel constant to z1.
  const double* trow = w.temb_table.data() + static_cast<size_t>(cache.t) * w.temb_dim;
  for (int f = 0; f < F; ++f) {
    const double* gzf = g_z1.data() + f * plane;
    double gsum = 0.0;
    for (size_t i = 0; i < plane; ++i) gsum += gzf[i];
    grads.temb_b[f] += gsum;
    for (int e = 0; e < w.temb_dim; ++e) {
      grads.temb_w[static_cast<size_t>(f) * w.temb_dim + e] += gsum * trow[e];
    }
  }
}

}  // namespace

std::span<const TensorRef> trainable_tensors() { return kTrainable; }

TinyDenoiserWeights TinyDenoiserWeights::init(int in_channels, int hidden_channels, int temb_dim,
                                              int max_timestep, SeededRng& rng) {
  if (in_channels < 1 || hidden_channels < 1 || max_timestep < 1 || temb_dim < 2 ||
      temb_dim % 2 != 0) {
    throw ConfigError("tiny denoiser shape parameters are invalid");
  }
  TinyDenoiserWeights w;
  w.in_channels = in_channels;
  w.hidden_channels = hidden_channels;
  w.temb_dim = temb_dim;
  w.max_timestep = max_timestep;

  const int F = hidden_channels;
  auto fill = [&rng](std::vector<double>& v, size_t n, double scale) {
    v.resize(n);
    for (double& x : v) x = scale * rng.next_normal();
  };
  fill(w.conv1_w, static_cast<size_t>(F) * in_channels * 9, 1.0 / std::sqrt(in_channels * 9.0));
  w.conv1_b.assign(F, 0.0);
  fill(w.temb_w, static_cast<size_t>(F) * temb_dim, 1.0 / std::sqrt(temb_dim));
  w.temb_b.assign(F, 0.0);
  fill(w.conv2_w, static_cast<size_t>(F) * F * 9, 1.0 / std::sqrt(F * 9.0));
  w.conv2_b.assign(F, 0.0);
  fill(w.conv3_w, static_cast<size_t>(F) * 9, 1.0 / std::sqrt(F * 9.0));
  w.conv3_b.assign(1, 0.0);

  const int half = temb_dim / 2;
  w.temb_table.resize(static_cast<size_t>(max_timestep + 1) * temb_dim);
  for (int t = 0; t <= max_timestep; ++t) {
    for (int j = 0; j < half; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / half);
      w.temb_table[static_cast<size_t>(t) * temb_dim + 2 * j] = std::sin(t * freq);
      w.temb_table[static_cast<size_t>(t) * temb_dim + 2 * j + 1] = std::cos(t * freq);
    }
  }
  return w;
}

TinyDenoiserWeights TinyDenoiserWeights::zeros_like() const {
  TinyDenoiserWeights z = *this;
  for (const TensorRef& ref : trainable_tensors()) {
    std::fill((z.*ref.member).begin(), (z.*ref.member).end(), 0.0);
  }
  return z;
}

bool TinyDenoiserWeights::same_shape(const TinyDenoiserWeights& other) const {
  if (in_channels != other.in_channels || hidden_channels != other.hidden_channels ||
      temb_dim != other.temb_dim || max_timestep != other.max_timestep) {
    return false;
  }
  for (const TensorRef& ref : trainable_tensors()) {
    if ((this->*ref.member).size() != (other.*ref.member).size()) return false;
  }
  return temb_table.size() == other.temb_table.size();
}

Image tiny_forward(const TinyDenoiserWeights& weights, const DenoiserInput& input) {
  ForwardCache cache;
  tiny_forward_cached(weights, input, cache);
  Image out(cache.height, cache.width);
  out.pixels = std::move(cache.out);
  return out;
}

namespace {

struct Target {
  int t = 0;
  Image x_t;
  Image noise;
};

// Fixed draw order: per item, first t, then the noise image.
std::vector<Target> draw_targets(std::span<const TrainingSample* const> batch,
                                 const NoiseSchedule& schedule, SeededRng& rng) {
  std::vector<Target> targets;
  targets.reserve(batch.size());
  for (const TrainingSample* s : batch) {
    Target tg;
    tg.t = 1 + static_cast<int>(rng.next_index(schedule.steps()));
    ForwardMarginal fm = forward_marginal(s->x0, tg.t, schedule, rng);
    tg.x_t = std::move(fm.x_t);
    tg.noise = std::move(fm.noise);
    targets.push_back(std::move(tg));
  }
  return targets;
}

DenoiserInput make_input(const TrainingSample& s, const Target& tg) {
  DenoiserInput in;
  in.x_t = &tg.x_t;
  in.brain = &s.brain;
  in.pathology = &s.pathology;
  in.t = tg.t;
  for (const Image& e : s.extra) in.extra.push_back(&e);
  return in;
}

double loss_over(const Denoiser& denoiser, std::span<const TrainingSample* const> batch,
                 const NoiseSchedule& schedule, SeededRng& rng) {
  if (batch.empty()) {
    throw std::invalid_argument("denoising_loss: empty batch");
  }
  const std::vector<Target> targets = draw_targets(batch, schedule, rng);
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const Image eps_hat = denoiser.predict(make_input(*batch[i], targets[i]));
    require_same_shape(eps_hat, targets[i].noise, "denoising_loss");
    for (size_t k = 0; k < eps_hat.pixels.size(); ++k) {
      const double d = eps_hat.pixels[k] - targets[i].noise.pixels[k];
      total += d * d;
    }
    count += eps_hat.pixels.size();
  }
  return total / static_cast<double>(count);
}

LossAndGrads loss_and_grads_over(const TinyDenoiserWeights& weights,
                                 std::span<const TrainingSample* const> batch,
                                 const NoiseSchedule& schedule, SeededRng& rng) {
  if (batch.empty()) {
    throw std::invalid_argument("denoising_loss_and_grads: empty batch");
  }
  const std::vector<Target> targets = draw_targets(batch, schedule, rng);
  LossAndGrads out;
  out.grads = weights.zeros_like();
  size_t count = 0;
  for (const Target& tg : targets) count += tg.noise.pixels.size();

  ForwardCache cache;
  for (size_t i = 0; i < batch.size(); ++i) {
    tiny_forward_cached(weights, make_input(*batch[i], targets[i]), cache);
    std::vector<double> g_out(cache.out.size());
    for (size_t k = 0; k < cache.out.size(); ++k) {
      const double d = cache.out[k] - targets[i].noise.pixels[k];
      out.loss += d * d;
      g_out[k] = 2.0 * d / static_cast<double>(count);
    }
    tiny_backward(weights, cache, g_out, out.grads);
  }
  out.loss /= static_cast<double>(count);
  return out;
}

std::vector<const TrainingSample*> as_pointers(const std::vector<TrainingSample>& batch) {
  std::vector<const TrainingSample*> ptrs;
  ptrs.reserve(batch.size());
  for (const TrainingSample& s : batch) ptrs.push_back(&s);
  return ptrs;
}

}  // namespace

double denoising_loss(const Denoiser& denoiser, const std::vector<TrainingSample>& batch,
                      const NoiseSchedule& schedule, SeededRng& rng) {
  const auto ptrs = as_pointers(batch);
  return loss_over(denoiser, ptrs, schedule, rng);
}

LossAndGrads denoising_loss_and_grads(const TinyDenoiserWeights& weights,
                                      const std::vector<TrainingSample>& batch,
                                      const NoiseSchedule& schedule, SeededRng& rng) {
  const auto ptrs = as_pointers(batch);
  return loss_and_grads_over(weights, ptrs, schedule, rng);
}

TrainResult train(TinyDenoiserWeights weights, const std::vector<TrainingSample>& dataset,
                  const NoiseSchedule& schedule, const OptimizerConfig& optimizer,
                  SeededRng& rng) {
  if (dataset.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (optimizer.learning_rate < 0.0 || optimizer.batch_size < 1 || optimizer.epochs < 0) {
    throw ConfigError("train: invalid optimizer configuration");
  }
  TinyDenoiserWeights velocity = weights.zeros_like();
  TrainResult result;
  std::vector<const TrainingSample*> order = as_pointers(dataset);

  for (int epoch = 0; epoch < optimizer.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_index(i)]);
    }
    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += optimizer.batch_size) {
      const size_t n = std::min<size_t>(optimizer.batch_size, order.size() - start);
      std::span<const TrainingSample* const> batch(order.data() + start, n);
      LossAndGrads lg = loss_and_grads_over(weights, batch, schedule, rng);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("denoising loss became non-finite at epoch " +
                            std::to_string(epoch + 1));
      }
      for (const TensorRef& ref : trainable_tensors()) {
        std::vector<double>& w = weights.*ref.member;
        std::vector<double>& v = velocity.*ref.member;
        const std::vector<double>& g = lg.grads.*ref.member;
        for (size_t k = 0; k < w.size(); ++k) {
          v[k] = optimizer.momentum * v[k] - optimizer.learning_rate * g[k];
          w[k] += v[k];
        }
      }
      epoch_loss += lg.loss * static_cast<double>(n);
      seen += n;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
  }
  result.weights = std::move(weights);
  return result;
}

// ---------------------------------------------------------------------------
// Weight persistence: "CFD1", version u16, shape header, tensors (LE doubles)
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'F', 'D', '1'};
constexpr uint16_t kVersion = 1;

void put_bytes(std::string& out, uint64_t v, int nbytes) {
  for (int i = 0; i < nbytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t take_bytes(std::istream& in, int nbytes) {
  uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw WeightsTruncatedError("weight file ends mid-field");
    v |= static_cast<uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_tensor(std::string& out, const std::vector<double>& v) {
  put_bytes(out, v.size(), 8);
  for (double d : v) put_bytes(out, std::bit_cast<uint64_t>(d), 8);
}

std::vector<double> take_tensor(std::istream& in, size_t expected, const char* name) {
  const uint64_t n = take_bytes(in, 8);
  if (n != expected) {
    throw WeightsShapeError(std::string("tensor ") + name + " holds " + std::to_string(n) +
                            " values, shape header implies " + std::to_string(expected));
  }
  std::vector<double> v(n);
  for (uint64_t i = 0; i < n; ++i) v[i] = std::bit_cast<double>(take_bytes(in, 8));
  return v;
}

size_t expected_size(const TinyDenoiserWeights& w, const char* name) {
  const size_t F = w.hidden_channels;
  if (std::strcmp(name, "conv1_w") == 0) return F * w.in_channels * 9;
  if (std::strcmp(name, "conv1_b") == 0) return F;
  if (std::strcmp(name, "temb_w") == 0) return F * w.temb_dim;
  if (std::strcmp(name, "temb_b") == 0) return F;
  if (std::strcmp(name, "conv2_w") == 0) return F * F * 9;
  if (std::strcmp(name, "conv2_b") == 0) return F;
  if (std::strcmp(name, "conv3_w") == 0) return F * 9;
  if (std::strcmp(name, "conv3_b") == 0) return 1;
  throw std::logic_error("unknown tensor name");
}

}  // namespace

void save_weights(const TinyDenoiserWeights& weights, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_bytes(buf, kVersion, 2);
  put_bytes(buf, static_cast<uint64_t>(weights.in_channels), 4);
  put_bytes(buf, static_cast<uint64_t>(weights.hidden_channels), 4);
  put_bytes(buf, static_cast<uint64_t>(weights.temb_dim), 4);
  put_bytes(buf, static_cast<uint64_t>(weights.max_timestep), 4);
  for (const TensorRef& ref : trainable_tensors()) put_tensor(buf, weights.*ref.member);
  put_tensor(buf, weights.temb_table);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw WeightsError("cannot open " + path + " for writing");
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) {
    throw WeightsError("short write to " + path);
  }
}

TinyDenoiserWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw WeightsError("cannot open " + path);
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw WeightsVersionError("not a CFD1 weight file: " + path);
  }
  const uint16_t version = static_cast<uint16_t>(take_bytes(in, 2));
  if (version != kVersion) {
    throw WeightsVersionError("weight file version " + std::to_string(version) +
                              ", expected " + std::to_string(kVersion));
  }
  TinyDenoiserWeights w;
  w.in_channels = static_cast<int>(take_bytes(in, 4));
  w.hidden_channels = static_cast<int>(take_bytes(in, 4));
  w.temb_dim = static_cast<int>(take_bytes(in, 4));
  w.max_timestep = static_cast<int>(take_bytes(in, 4));
  if (w.in_channels < 1 || w.hidden_channels < 1 || w.temb_dim < 2 || w.temb_dim % 2 != 0 ||
      w.max_timestep < 1) {
    throw WeightsShapeError("weight file shape header is invalid");
  }
  for (const TensorRef& ref : trainable_tensors()) {
    w.*ref.member = take_tensor(in, expected_size(w, ref.name), ref.name);
  }
  w.temb_table =
      take_tensor(in, static_cast<size_t>(w.max_timestep + 1) * w.temb_dim, "temb_table");
  return w;
}

void expect_channels(const TinyDenoiserWeights& weights, int expected) {
  if (weights.in_channels != expected) {
    throw WeightsShapeError("model expects " + std::to_string(expected) +
                            " input channels, weight file has " +
                            std::to_string(weights.in_channels));
  }
}

}  // namespace cfdiff
