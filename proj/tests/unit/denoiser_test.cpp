#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <doctest.h>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/diffusion.hpp"
#include "cfdiff/errors.hpp"
#include "cfdiff/phantom.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

using namespace cfdiff;

namespace {

// Trapezoid-quadrature oracle for the posterior mean E[x0 | x_t] under a
// Gaussian-mixture prior and the forward marginal x_t = sqrt(ab) x0 + noise.
double quadrature_posterior_mean(double x_t, const std::vector<double>& w,
                                 const std::vector<double>& mu, const std::vector<double>& s,
                                 double alpha_bar) {
  const double sab = std::sqrt(alpha_bar);
  const double lik_var = 1.0 - alpha_bar;
  const double lo = -5.0, hi = 6.0, step = 1e-4;
  double num = 0.0, den = 0.0;
  for (double x0 = lo; x0 <= hi; x0 += step) {
    double prior = 0.0;
    for (size_t k = 0; k < w.size(); ++k) {
      const double d = (x0 - mu[k]) / s[k];
      prior += w[k] / s[k] * std::exp(-0.5 * d * d);
    }
    const double dl = x_t - sab * x0;
    const double lik = std::exp(-0.5 * dl * dl / lik_var);
    const double edge = (x0 == lo || x0 + step > hi) ? 0.5 : 1.0;
    num += edge * x0 * prior * lik;
    den += edge * prior * lik;
  }
  return num / den;
}

std::vector<TrainingSample> phantom_training_set(const PhantomParams& params, int n,
                                                 uint64_t seed) {
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    SeededRng rng = SeededRng(seed).derive(i);
    PhantomSample s = generate(params, true, rng);
    out.push_back({std::move(s.image), std::move(s.brain), std::move(s.pathology), {}});
  }
  return out;
}

// Knows each sample's x0 and recovers the exact noise from x_t: the ideal
// denoiser for loss-zero checks. Relies on being called in batch order.
struct ExactNoiseStub : Denoiser {
  const std::vector<TrainingSample>* batch;
  const NoiseSchedule* schedule;
  mutable size_t next = 0;
  Image predict(const DenoiserInput& in) const override {
    const Image& x0 = (*batch)[next++].x0;
    const double ab = schedule->alpha_bar(in.t);
    Image eps = *in.x_t;
    for (size_t i = 0; i < eps.pixels.size(); ++i) {
      eps.pixels[i] = (eps.pixels[i] - std::sqrt(ab) * x0.pixels[i]) / std::sqrt(1.0 - ab);
    }
    return eps;
  }
};

struct ZeroDenoiser : Denoiser {
  Image predict(const DenoiserInput& in) const override {
    return Image::zeros(in.x_t->height, in.x_t->width);
  }
};

TinyDenoiserWeights small_weights(int in_channels, uint64_t seed, int max_t = 10) {
  SeededRng rng(seed);
  return TinyDenoiserWeights::init(in_channels, 3, 4, max_t, rng);
}

std::vector<TrainingSample> random_binary_samples(int n, int size, int extras, uint64_t seed) {
  SeededRng rng(seed);
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    TrainingSample s;
    s.x0 = Image(size, size);
    for (double& v : s.x0.pixels) v = rng.next_uniform();
    s.brain = Image(size, size);
    for (double& v : s.brain.pixels) v = rng.next_uniform() < 0.7 ? 1.0 : 0.0;
    s.pathology = Image(size, size);
    for (size_t k = 0; k < s.pathology.pixels.size(); ++k) {
      s.pathology.pixels[k] =
          (s.brain.pixels[k] != 0.0 && rng.next_uniform() < 0.15) ? 1.0 : 0.0;
    }
    for (int e = 0; e < extras; ++e) {
      Image extra(size, size);
      for (double& v : extra.pixels) v = rng.next_uniform();
      s.extra.push_back(std::move(extra));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("analytic epsilon: point-mass prior returns the exact noise") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.2);
  PixelwiseGaussianPrior prior;
  prior.height = 2;
  prior.width = 2;
  prior.offset = {0, 1, 2, 3, 4};
  prior.weight = {1, 1, 1, 1};
  prior.mean = {0.1, 0.4, 0.7, 0.9};
  prior.stddev = {0, 0, 0, 0};

  SeededRng rng(8);
  const Image x_t = rng.normal_image(2, 2);
  DenoiserInput in;
  in.x_t = &x_t;
  in.t = 6;
  const Image eps = analytic_epsilon(in, prior, s);
  const double ab = s.alpha_bar(6);
  for (size_t i = 0; i < 4; ++i) {
    const double expected =
        (x_t.pixels[i] - std::sqrt(ab) * prior.mean[i]) / std::sqrt(1.0 - ab);
    CHECK(eps.pixels[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("analytic epsilon: noise-free observation of the mean gives zero") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.2);
  PixelwiseGaussianPrior prior;
  prior.height = 1;
  prior.width = 1;
  prior.offset = {0, 1};
  prior.weight = {1};
  prior.mean = {0.6};
  prior.stddev = {0.2};

  Image x_t(1, 1);
  x_t.pixels[0] = std::sqrt(s.alpha_bar(4)) * 0.6;
  DenoiserInput in;
  in.x_t = &x_t;
  in.t = 4;
  const Image eps = analytic_epsilon(in, prior, s);
  CHECK(eps.pixels[0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("analytic epsilon matches the quadrature oracle on mixtures") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.2);
  const std::vector<double> w{0.3, 0.7};
  const std::vector<double> mu{0.2, 0.8};
  const std::vector<double> sd{0.05, 0.15};

  PixelwiseGaussianPrior prior;
  prior.height = 1;
  prior.width = 1;
  prior.offset = {0, 2};
  prior.weight = w;
  prior.mean = mu;
  prior.stddev = sd;

  const int t = 5;
  const double ab = s.alpha_bar(t);
  for (const double x : {-0.5, 0.1, 0.45, 0.8, 1.6}) {
    Image x_t(1, 1);
    x_t.pixels[0] = x;
    DenoiserInput in;
    in.x_t = &x_t;
    in.t = t;
    const Image eps = analytic_epsilon(in, prior, s);
    const double m_star = quadrature_posterior_mean(x, w, mu, sd, ab);
    const double expected = (x - std::sqrt(ab) * m_star) / std::sqrt(1.0 - ab);
    CHECK(eps.pixels[0] == doctest::Approx(expected).epsilon(1e-6));
  }

  // Three components exercise the general mixture path.
  PixelwiseGaussianPrior p3;
  p3.height = 1;
  p3.width = 1;
  p3.offset = {0, 3};
  p3.weight = {0.2, 0.5, 0.3};
  p3.mean = {0.1, 0.5, 0.9};
  p3.stddev = {0.1, 0.05, 0.2};
  Image x_t(1, 1);
  x_t.pixels[0] = 0.7;
  DenoiserInput in;
  in.x_t = &x_t;
  in.t = t;
  const Image eps = analytic_epsilon(in, p3, s);
  const double m3 = quadrature_posterior_mean(0.7, p3.weight, p3.mean, p3.stddev, ab);
  CHECK(eps.pixels[0] ==
        doctest::Approx((0.7 - std::sqrt(ab) * m3) / std::sqrt(1.0 - ab)).epsilon(1e-6));
}

TEST_CASE("analytic epsilon rejects t = 0 and out-of-range t") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.2);
  PixelwiseGaussianPrior prior;
  prior.height = 1;
  prior.width = 1;
  prior.offset = {0, 1};
  prior.weight = {1};
  prior.mean = {0.5};
  prior.stddev = {0.1};
  Image x_t(1, 1);
  DenoiserInput in;
  in.x_t = &x_t;
  in.t = 0;
  CHECK_THROWS_AS(analytic_epsilon(in, prior, s), std::domain_error);
  in.t = 11;
  CHECK_THROWS_AS(analytic_epsilon(in, prior, s), std::out_of_range);
}

TEST_CASE("denoising loss: exact stub scores zero, zero denoiser scores one") {
  const PhantomParams params;
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.05);
  const std::vector<TrainingSample> batch = phantom_training_set(params, 16, 900);

  ExactNoiseStub stub;
  stub.batch = &batch;
  stub.schedule = &s;
  SeededRng rng_a(500);
  CHECK(denoising_loss(stub, batch, s, rng_a) < 1e-20);

  ZeroDenoiser zero;
  SeededRng rng_b(500);
  const double loss = denoising_loss(zero, batch, s, rng_b);
  CHECK(loss == doctest::Approx(1.0).epsilon(0.05));  // E ||eps||^2 per pixel

  SeededRng rng_c(500);
  CHECK_THROWS_AS(denoising_loss(zero, {}, s, rng_c), std::invalid_argument);
}

TEST_CASE("analytic denoiser is no worse than untrained and zero denoisers") {
  const PhantomParams params;
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.05);
  const AnalyticDenoiser analytic(params, s);
  SeededRng wrng(1);
  const TinyDenoiser untrained(TinyDenoiserWeights::init(3, 4, 8, 50, wrng));
  ZeroDenoiser zero;

  const int n = 150;
  std::vector<double> diff_zero(n), diff_tiny(n);
  for (int i = 0; i < n; ++i) {
    SeededRng gen = SeededRng(7000).derive(i);
    PhantomSample ps = generate(params, true, gen);
    const std::vector<TrainingSample> one = {{ps.image, ps.brain, ps.pathology, {}}};
    SeededRng ra(9000 + i), rb(9000 + i), rc(9000 + i);
    const double la = denoising_loss(analytic, one, s, ra);
    const double lz = denoising_loss(zero, one, s, rb);
    const double lt = denoising_loss(untrained, one, s, rc);
    diff_zero[i] = lz - la;
    diff_tiny[i] = lt - la;
  }
  for (const std::vector<double>* d : {&diff_zero, &diff_tiny}) {
    double mean = 0.0;
    for (double v : *d) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : *d) var += (v - mean) * (v - mean);
    var /= (n - 1);
    const double se = std::sqrt(var / n);
    CHECK(mean > -3.0 * se);  // Bayes optimality, 3-sigma statistical assertion
  }
}

TEST_CASE("tiny forward: zero weights, determinism, norm bound") {
  TinyDenoiserWeights w = small_weights(3, 2);
  const std::vector<TrainingSample> samples = random_binary_samples(1, 8, 0, 11);
  const TrainingSample& s0 = samples[0];

  DenoiserInput in;
  in.x_t = &s0.x0;
  in.brain = &s0.brain;
  in.pathology = &s0.pathology;
  in.t = 3;

  TinyDenoiserWeights zeros = w.zeros_like();
  const Image zout = tiny_forward(zeros, in);
  for (double v : zout.pixels) CHECK(v == 0.0);

  const Image a = tiny_forward(w, in);
  const Image b = tiny_forward(w, in);
  CHECK(a == b);
  CHECK(all_finite(a));

  // L_inf bound propagated from the weight norms (|silu(x)| <= |x|).
  double max_in = 0.0;
  for (const Image* c : {&s0.x0, &s0.brain, &s0.pathology}) {
    for (double v : c->pixels) max_in = std::max(max_in, std::abs(v));
  }
  const int F = w.hidden_channels;
  double m1 = 0.0;
  for (int f = 0; f < F; ++f) {
    double acc = std::abs(w.conv1_b[f]) + std::abs(w.temb_b[f]);
    for (int c = 0; c < w.in_channels * 9; ++c) {
      acc += std::abs(w.conv1_w[static_cast<size_t>(f) * w.in_channels * 9 + c]) * max_in;
    }
    for (int e = 0; e < w.temb_dim; ++e) {
      acc += std::abs(w.temb_w[static_cast<size_t>(f) * w.temb_dim + e]);
    }
    m1 = std::max(m1, acc);
  }
  double m2 = 0.0;
  for (int f = 0; f < F; ++f) {
    double acc = std::abs(w.conv2_b[f]);
    for (int c = 0; c < F * 9; ++c) {
      acc += std::abs(w.conv2_w[static_cast<size_t>(f) * F * 9 + c]) * m1;
    }
    m2 = std::max(m2, acc);
  }
  double bound = std::abs(w.conv3_b[0]);
  for (int c = 0; c < F * 9; ++c) bound += std::abs(w.conv3_w[c]) * m2;
  for (double v : a.pixels) CHECK(std::abs(v) <= bound + 1e-12);
}

TEST_CASE("tiny forward validates channels and timestep") {
  TinyDenoiserWeights w = small_weights(3, 4);
  const std::vector<TrainingSample> samples = random_binary_samples(1, 6, 1, 12);
  DenoiserInput in;
  in.x_t = &samples[0].x0;
  in.brain = &samples[0].brain;
  in.pathology = &samples[0].pathology;
  in.t = 2;
  in.extra.push_back(&samples[0].extra[0]);  // 4 channels into a 3-channel net
  CHECK_THROWS_WITH_AS(tiny_forward(w, in), doctest::Contains("3"), ShapeError);
  in.extra.clear();
  in.t = 99;
  CHECK_THROWS_AS(tiny_forward(w, in), std::out_of_range);
}

TEST_CASE("analytic gradients match central finite differences") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.15);
  for (const int channels : {3, 5}) {
    TinyDenoiserWeights w = small_weights(channels, 77);
    const std::vector<TrainingSample> batch =
        random_binary_samples(3, 6, channels - 3, 1234);

    const uint64_t loss_seed = 4321;
    SeededRng rng(loss_seed);
    const LossAndGrads lg = denoising_loss_and_grads(w, batch, s, rng);
    CHECK(std::isfinite(lg.loss));

    const double h = 1e-5;
    for (const TensorRef& ref : trainable_tensors()) {
      std::vector<double>& tensor = w.*ref.member;
      const std::vector<double>& grad = lg.grads.*ref.member;
      REQUIRE(tensor.size() == grad.size());
      for (size_t i = 0; i < tensor.size(); ++i) {
        const double saved = tensor[i];
        tensor[i] = saved + h;
        SeededRng rp(loss_seed);
        const double lp = denoising_loss_and_grads(w, batch, s, rp).loss;
        tensor[i] = saved - h;
        SeededRng rm(loss_seed);
        const double lm = denoising_loss_and_grads(w, batch, s, rm).loss;
        tensor[i] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        CHECK(std::abs(fd - grad[i]) / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("training: zero learning rate leaves weights untouched") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.15);
  const std::vector<TrainingSample> data = random_binary_samples(6, 6, 0, 55);
  TinyDenoiserWeights w = small_weights(3, 5);
  const TinyDenoiserWeights before = w;
  OptimizerConfig opt;
  opt.learning_rate = 0.0;
  opt.epochs = 1;
  opt.batch_size = 4;
  SeededRng rng(66);
  const TrainResult r = train(std::move(w), data, s, opt, rng);
  for (const TensorRef& ref : trainable_tensors()) {
    CHECK(r.weights.*ref.member == before.*ref.member);
  }
  CHECK(r.epoch_losses.size() == 1);
}

TEST_CASE("training reduces the smoothed loss on phantoms") {
  const PhantomParams params;
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.05);
  const std::vector<TrainingSample> data = phantom_training_set(params, 24, 31);
  SeededRng wrng(3);
  TinyDenoiserWeights w = TinyDenoiserWeights::init(3, 6, 8, 50, wrng);
  OptimizerConfig opt;
  opt.learning_rate = 1e-3;
  opt.batch_size = 8;
  opt.epochs = 12;
  SeededRng rng(90);
  const TrainResult r = train(std::move(w), data, s, opt, rng);
  REQUIRE(r.epoch_losses.size() == 12);
  const double head = (r.epoch_losses[0] + r.epoch_losses[1] + r.epoch_losses[2]) / 3.0;
  const double tail = (r.epoch_losses[9] + r.epoch_losses[10] + r.epoch_losses[11]) / 3.0;
  CHECK(tail < head);
}

TEST_CASE("training reports divergence with the epoch") {
  const NoiseSchedule s = build_schedule(10, 0.01, 0.15);
  const std::vector<TrainingSample> data = random_binary_samples(4, 6, 0, 58);
  TinyDenoiserWeights w = small_weights(3, 6);
  OptimizerConfig opt;
  opt.learning_rate = 1e9;  // guaranteed blow-up
  opt.epochs = 50;
  opt.batch_size = 4;
  SeededRng rng(91);
  CHECK_THROWS_WITH_AS(train(std::move(w), data, s, opt, rng), doctest::Contains("epoch"),
                       TrainingError);
}

TEST_CASE("training makes the output sensitive to the pathology channel") {
  const PhantomParams params;
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.05);
  const std::vector<TrainingSample> data = phantom_training_set(params, 16, 77);
  SeededRng wrng(4);
  TinyDenoiserWeights w = TinyDenoiserWeights::init(3, 6, 8, 50, wrng);
  OptimizerConfig opt;
  opt.learning_rate = 1e-3;
  opt.batch_size = 8;
  opt.epochs = 3;
  SeededRng rng(92);
  const TrainResult r = train(std::move(w), data, s, opt, rng);

  SeededRng gen(93);
  const PhantomSample ps = generate(params, true, gen);
  SeededRng noise_rng(94);
  const Image x_t = forward_marginal(ps.image, 25, s, noise_rng).x_t;
  DenoiserInput in;
  in.x_t = &x_t;
  in.brain = &ps.brain;
  in.pathology = &ps.pathology;
  in.t = 25;
  const Image with_p = tiny_forward(r.weights, in);
  const Image empty = Image::zeros(params.size, params.size);
  in.pathology = &empty;
  const Image without_p = tiny_forward(r.weights, in);
  CHECK(mean_abs_diff(with_p, without_p) > 0.0);
}

TEST_CASE("weight files round-trip bit-exactly and fail with distinct errors") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cfdiff_weights_test";
  fs::create_directories(dir);
  const fs::path path = dir / "w.cfd";

  TinyDenoiserWeights w = small_weights(5, 123, 20);
  save_weights(w, path.string());
  const TinyDenoiserWeights loaded = load_weights(path.string());
  CHECK(loaded.in_channels == w.in_channels);
  CHECK(loaded.hidden_channels == w.hidden_channels);
  CHECK(loaded.temb_dim == w.temb_dim);
  CHECK(loaded.max_timestep == w.max_timestep);
  for (const TensorRef& ref : trainable_tensors()) {
    CHECK(loaded.*ref.member == w.*ref.member);
  }
  CHECK(loaded.temb_table == w.temb_table);

  // Corrupted magic -> version error, not a crash.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  CHECK_THROWS_AS(load_weights(path.string()), WeightsVersionError);

  // Truncated file.
  save_weights(w, path.string());
  const auto full_size = fs::file_size(path);
  fs::resize_file(path, full_size / 2);
  CHECK_THROWS_AS(load_weights(path.string()), WeightsTruncatedError);

  // Channel mismatch names both counts.
  save_weights(w, path.string());
  const TinyDenoiserWeights reloaded = load_weights(path.string());
  CHECK_THROWS_WITH_AS(expect_channels(reloaded, 3), doctest::Contains("5"), WeightsShapeError);
  CHECK_THROWS_WITH_AS(expect_channels(reloaded, 3), doctest::Contains("3"), WeightsShapeError);

  fs::remove_all(dir);
}
