#include <benchmark/benchmark.h>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/diffusion.hpp"
#include "cfdiff/editing.hpp"
#include "cfdiff/metrics.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/phantom.hpp"
#include "cfdiff/rng.hpp"
#include "cfdiff/schedule.hpp"

namespace {

using namespace cfdiff;

Image random_mask(int side, double density, SeededRng& rng) {
  Image m(side, side);
  for (double& v : m.pixels) v = rng.next_uniform() < density ? 1.0 : 0.0;
  return m;
}

void BM_dilate(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  SeededRng rng(1);
  const Image mask = random_mask(side, 0.05, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dilate(mask, k));
  }
  state.SetComplexityN(side * side);
}
BENCHMARK(BM_dilate)->Args({32, 7})->Args({128, 7})->Args({128, 25});

void BM_forward_marginal(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const NoiseSchedule s = build_schedule(200, 1e-4, 0.02);
  const Image x0 = Image::constant(side, side, 0.5);
  SeededRng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_marginal(x0, 100, s, rng));
  }
}
BENCHMARK(BM_forward_marginal)->Arg(32)->Arg(128);

void BM_analytic_epsilon(benchmark::State& state) {
  const PhantomParams params;
  const NoiseSchedule s = build_schedule(200, 1e-4, 0.02);
  SeededRng rng(3);
  const PhantomSample ps = generate(params, true, rng);
  const PixelwiseGaussianPrior prior = conditional_prior(ps.brain, ps.pathology, params);
  const Image x_t = forward_marginal(ps.image, 100, s, rng).x_t;
  DenoiserInput in;
  in.x_t = &x_t;
  in.brain = &ps.brain;
  in.pathology = &ps.pathology;
  in.t = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(analytic_epsilon(in, prior, s));
  }
}
BENCHMARK(BM_analytic_epsilon);

void BM_tiny_forward(benchmark::State& state) {
  const PhantomParams params;
  SeededRng wrng(4);
  const TinyDenoiserWeights w = TinyDenoiserWeights::init(3, 8, 16, 200, wrng);
  SeededRng rng(5);
  const PhantomSample ps = generate(params, true, rng);
  DenoiserInput in;
  in.x_t = &ps.image;
  in.brain = &ps.brain;
  in.pathology = &ps.pathology;
  in.t = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tiny_forward(w, in));
  }
}
BENCHMARK(BM_tiny_forward);

void BM_mededit_chain(benchmark::State& state) {
  const PhantomParams params;
  const NoiseSchedule s = build_schedule(static_cast<int>(state.range(0)), 1e-4, 0.02);
  const AnalyticDenoiser denoiser(params, s);
  SeededRng gen(6);
  const PhantomSample lesioned = generate(params, true, gen);
  const PhantomSample healthy = generate(params, false, gen);
  uint64_t seed = 0;
  for (auto _ : state) {
    SeededRng rng(seed++);
    benchmark::DoNotOptimize(mededit(healthy.image, healthy.brain, lesioned.pathology, denoiser,
                                     s, 7, 4, rng));
  }
}
BENCHMARK(BM_mededit_chain)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_frechet_distance(benchmark::State& state) {
  const PhantomParams params;
  std::vector<Image> a, b;
  for (int i = 0; i < 100; ++i) {
    SeededRng rng = SeededRng(7).derive(i);
    a.push_back(generate(params, true, rng).image);
    SeededRng rng2 = SeededRng(8).derive(i);
    b.push_back(generate(params, false, rng2).image);
  }
  const FeatureSet fa = extract_features(a, 11, 64);
  const FeatureSet fb = extract_features(b, 11, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(frechet_distance(fa, fb));
  }
}
BENCHMARK(BM_frechet_distance);

}  // namespace

BENCHMARK_MAIN();
