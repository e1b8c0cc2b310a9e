#include <cmath>
#include <vector>

#include <doctest.h>

#include "cfdiff/errors.hpp"
#include "cfdiff/metrics.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/phantom.hpp"
#include "cfdiff/rng.hpp"

using namespace cfdiff;

namespace {

FeatureSet moments(int n, std::vector<double> mean, std::vector<double> cov) {
  FeatureSet fs;
  fs.n = n;
  fs.d = static_cast<int>(mean.size());
  fs.mean = std::move(mean);
  fs.cov = std::move(cov);
  return fs;
}

Image bits(int h, int w, std::initializer_list<int> ones) {
  Image m(h, w);
  for (int i : ones) m.pixels[i] = 1.0;
  return m;
}

}  // namespace

TEST_CASE("dice basics") {
  const Image a = bits(2, 2, {0, 1});
  CHECK(dice(a, a) == 1.0);

  const Image b = bits(2, 2, {2, 3});
  CHECK(dice(a, b) == 0.0);

  // |a| = |b| = 2 with overlap 1.
  const Image c = bits(2, 2, {1, 2});
  CHECK(dice(a, c) == doctest::Approx(0.5));

  const Image empty(2, 2);
  CHECK(dice(empty, empty) == 1.0);  // stated convention
  CHECK(dice(a, empty) == 0.0);

  CHECK(dice(a, c) == dice(c, a));
  CHECK_THROWS_AS(dice(a, Image(3, 2)), ShapeError);
}

TEST_CASE("feature extraction is deterministic per seed") {
  SeededRng rng(1);
  std::vector<Image> images;
  for (int i = 0; i < 5; ++i) images.push_back(rng.normal_image(8, 8));

  const FeatureSet a = extract_features(images, 99, 16);
  const FeatureSet b = extract_features(images, 99, 16);
  CHECK(a.mean == b.mean);
  CHECK(a.cov == b.cov);

  const FeatureSet c = extract_features(images, 100, 16);
  CHECK(a.mean != c.mean);
}

TEST_CASE("identical images give a zero covariance") {
  const Image img = Image::constant(8, 8, 0.3);
  const std::vector<Image> images(6, img);
  const FeatureSet fs = extract_features(images, 7, 4);
  for (double v : fs.cov) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("white-noise feature covariance matches projection * projection^T") {
  // The projection construction (SeededRng(seed), N(0, 1/npix), row-major
  // d x npix) is part of the interface; the oracle regenerates it.
  const int d = 6, side = 8, n = 5000;
  const uint64_t seed = 314;
  const int npix = side * side;
  SeededRng prng(seed);
  std::vector<double> projection(static_cast<size_t>(d) * npix);
  for (double& v : projection) v = prng.next_normal() / std::sqrt(npix);

  std::vector<double> ppt(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int k = 0; k < npix; ++k) {
        acc += projection[static_cast<size_t>(i) * npix + k] *
               projection[static_cast<size_t>(j) * npix + k];
      }
      ppt[static_cast<size_t>(i) * d + j] = acc;
    }
  }

  SeededRng img_rng(2000);
  std::vector<Image> images;
  images.reserve(n);
  for (int i = 0; i < n; ++i) images.push_back(img_rng.normal_image(side, side));
  const FeatureSet fs = extract_features(images, seed, d);

  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double target = ppt[static_cast<size_t>(i) * d + j];
      const double vii = ppt[static_cast<size_t>(i) * d + i];
      const double vjj = ppt[static_cast<size_t>(j) * d + j];
      const double se = std::sqrt((vii * vjj + target * target) / n);
      CHECK(std::abs(fs.cov[static_cast<size_t>(i) * d + j] - target) < 4.0 * se);
    }
  }
}

TEST_CASE("frechet distance closed forms") {
  // Univariate N(0,1) vs N(1,1): (mu1-mu2)^2 + (s1-s2)^2 = 1.
  const FeatureSet n01 = moments(100, {0.0}, {1.0});
  const FeatureSet n11 = moments(100, {1.0}, {1.0});
  CHECK(frechet_distance(n01, n11) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(frechet_distance(n01, n01) == doctest::Approx(0.0).epsilon(1e-9));

  // Diagonal Gaussians, variances (1,1) vs (4,4): per-dimension (1-2)^2.
  const FeatureSet a = moments(100, {0.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
  const FeatureSet b = moments(100, {0.0, 0.0}, {4.0, 0.0, 0.0, 4.0});
  CHECK(frechet_distance(a, b) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("frechet distance is symmetric, non-negative, zero on equal moments") {
  SeededRng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 5;
    // Random PSD covariances via M^T M.
    auto random_cov = [&rng, d]() {
      std::vector<double> m(static_cast<size_t>(d) * d);
      for (double& v : m) v = rng.next_normal();
      std::vector<double> c(static_cast<size_t>(d) * d, 0.0);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          double acc = 0.0;
          for (int k = 0; k < d; ++k) {
            acc += m[static_cast<size_t>(k) * d + i] * m[static_cast<size_t>(k) * d + j];
          }
          c[static_cast<size_t>(i) * d + j] = acc;
        }
      }
      return c;
    };
    std::vector<double> mean_a(d), mean_b(d);
    for (double& v : mean_a) v = rng.next_normal();
    for (double& v : mean_b) v = rng.next_normal();
    const FeatureSet a = moments(50, mean_a, random_cov());
    const FeatureSet b = moments(50, mean_b, random_cov());

    const double ab = frechet_distance(a, b);
    const double ba = frechet_distance(b, a);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) < 1e-8);
    CHECK(frechet_distance(a, a) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("frechet distance input validation") {
  const FeatureSet a = moments(10, {0.0}, {1.0});
  const FeatureSet b = moments(10, {0.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
  CHECK_THROWS_AS(frechet_distance(a, b), ShapeError);
  FeatureSet bad = a;
  bad.cov[0] = std::nan("");
  CHECK_THROWS_AS(frechet_distance(a, bad), std::invalid_argument);
}

TEST_CASE("same-distribution frechet distance sits below a resampled null threshold") {
  const PhantomParams params;
  std::vector<Image> lesioned, healthy;
  for (int i = 0; i < 160; ++i) {
    SeededRng rng = SeededRng(4000).derive(i);
    lesioned.push_back(generate(params, true, rng).image);
  }
  for (int i = 0; i < 80; ++i) {
    SeededRng rng = SeededRng(4001).derive(i);
    healthy.push_back(generate(params, false, rng).image);
  }

  // Null distribution: random 80/80 splits of the lesioned set.
  double null_max = 0.0;
  for (uint64_t split = 0; split < 8; ++split) {
    SeededRng rng(5000 + split);
    std::vector<size_t> order(lesioned.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_index(i)]);
    }
    std::vector<Image> first, second;
    for (size_t i = 0; i < 80; ++i) first.push_back(lesioned[order[i]]);
    for (size_t i = 80; i < 160; ++i) second.push_back(lesioned[order[i]]);
    const double fd = frechet_distance(extract_features(first, 9, 16),
                                       extract_features(second, 9, 16));
    null_max = std::max(null_max, fd);
  }

  std::vector<Image> first_half(lesioned.begin(), lesioned.begin() + 80);
  const double cross = frechet_distance(extract_features(first_half, 9, 16),
                                        extract_features(healthy, 9, 16));
  CHECK(cross > null_max);  // lesioned vs healthy clearly exceeds the null
}

TEST_CASE("lesion segmenter oracle") {
  PhantomParams noiseless;
  noiseless.noise_background = noiseless.noise_ventricle = 0.0;
  noiseless.noise_tissue = noiseless.noise_lesion = 0.0;
  SeededRng rng(60);
  const PhantomSample clean = generate(noiseless, true, rng);
  CHECK(dice(segment_lesion(clean.image, noiseless), clean.pathology) == 1.0);

  const PhantomSample healthy = generate(noiseless, false, rng);
  CHECK(mask_area(segment_lesion(healthy.image, noiseless)) == 0);

  const PhantomParams noisy;
  double min_dice = 1.0;
  for (int i = 0; i < 100; ++i) {
    SeededRng r = SeededRng(6100).derive(i);
    const PhantomSample s = generate(noisy, true, r);
    min_dice = std::min(min_dice, dice(segment_lesion(s.image, noisy), s.pathology));
  }
  CHECK(min_dice >= 0.9);
}

TEST_CASE("indirect effect error") {
  const PhantomParams params;

  // The expected render scores (near) zero: rasterization tolerance.
  SeededRng rng(70);
  const PhantomSample s = generate(params, true, rng);
  const Image expected_render =
      conditional_prior(s.brain, s.pathology, params).mean_image();
  CHECK(indirect_effect_error(expected_render, s.brain, s.pathology, params) <= 4.0);

  // A real noisy sample stays within the rasterization band too.
  CHECK(indirect_effect_error(s.image, s.brain, s.pathology, params) <= 4.0);

  // Painting the lesion into a healthy prior without touching the ventricles
  // (the naive-repaint failure mode) scores the full enlargement amount.
  const Image healthy_render =
      conditional_prior(s.brain, Image::zeros(params.size, params.size), params).mean_image();
  Image painted = healthy_render;
  for (size_t i = 0; i < painted.pixels.size(); ++i) {
    if (s.pathology.pixels[i] != 0.0) painted.pixels[i] = params.intensity_lesion;
  }
  const double expected_delta =
      expected_ventricle_area(params, s.side, s.lesion_area) -
      expected_ventricle_area(params, LesionSide::none, 0);
  const double err = indirect_effect_error(painted, s.brain, s.pathology, params);
  CHECK(err == doctest::Approx(expected_delta).epsilon(0.35));

  // gain = 0: no indirect effect exists; the mean error over seeds stays at
  // the rasterization/boundary-noise floor.
  PhantomParams flat = params;
  flat.enlargement_gain = 0.0;
  double total = 0.0;
  for (int i = 0; i < 20; ++i) {
    SeededRng rng2 = SeededRng(71).derive(i);
    const PhantomSample f = generate(flat, true, rng2);
    total += indirect_effect_error(f.image, f.brain, f.pathology, flat);
  }
  CHECK(total / 20.0 <= 4.0);

  CHECK_THROWS_AS(
      indirect_effect_error(s.image, s.brain, Image::zeros(params.size, params.size), params),
      MetricError);
}
