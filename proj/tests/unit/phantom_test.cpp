#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "cfdiff/errors.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/phantom.hpp"
#include "cfdiff/rng.hpp"

using namespace cfdiff;

namespace {

// Independent re-derivation of the phantom's expected (noise-free) image:
// ellipse membership, lesion override, anti-aliased ventricle disks whose
// ipsilateral radius follows the enlargement law.
Image oracle_expected_image(const PhantomParams& p, const Image& pathology) {
  const double c = (p.size - 1) / 2.0;
  int area = 0;
  double cx_sum = 0.0;
  for (int y = 0; y < p.size; ++y) {
    for (int x = 0; x < p.size; ++x) {
      if (pathology.at(y, x) != 0.0) {
        ++area;
        cx_sum += x;
      }
    }
  }
  const bool healthy = area == 0;
  const bool left = healthy || cx_sum / area < c;
  const double r_enlarged = p.ventricle_radius + p.enlargement_gain * area / 100.0;
  const double r_left = healthy ? p.ventricle_radius : (left ? r_enlarged : p.ventricle_radius);
  const double r_right = healthy ? p.ventricle_radius : (left ? p.ventricle_radius : r_enlarged);

  Image out(p.size, p.size);
  for (int y = 0; y < p.size; ++y) {
    for (int x = 0; x < p.size; ++x) {
      const double ex = (x - c) / p.brain_rx;
      const double ey = (y - c) / p.brain_ry;
      if (ex * ex + ey * ey > 1.0) {
        out.at(y, x) = p.intensity_background;
        continue;
      }
      if (pathology.at(y, x) != 0.0) {
        out.at(y, x) = p.intensity_lesion;
        continue;
      }
      const double dl = std::hypot(x - (c - p.ventricle_offset), y - c);
      const double dr = std::hypot(x - (c + p.ventricle_offset), y - c);
      const double wl = std::clamp(r_left - dl + 0.5, 0.0, 1.0);
      const double wr = std::clamp(r_right - dr + 0.5, 0.0, 1.0);
      const double w = std::max(wl, wr);
      out.at(y, x) = w * p.intensity_ventricle + (1.0 - w) * p.intensity_tissue;
    }
  }
  return out;
}

int oracle_disk_count(const PhantomParams& p, double cx, double cy, double r) {
  int n = 0;
  for (int y = 0; y < p.size; ++y) {
    for (int x = 0; x < p.size; ++x) {
      if (std::hypot(x - cx, y - cy) <= r) ++n;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("healthy phantom: empty pathology, both ventricles at base radius") {
  const PhantomParams params;
  SeededRng rng(1);
  const PhantomSample s = generate(params, false, rng);
  CHECK(mask_area(s.pathology) == 0);
  CHECK(s.side == LesionSide::none);
  const PhantomGeometry g = phantom_geometry(params);
  const int base = oracle_disk_count(params, g.vent_left_x, g.vent_y, params.ventricle_radius);
  CHECK(s.true_ipsi_ventricle_area == base);
  CHECK(mask_area(s.ventricles) == 2 * base);
}

TEST_CASE("zero enlargement gain leaves ventricle areas identical") {
  PhantomParams params;
  params.enlargement_gain = 0.0;
  SeededRng rng(2);
  const PhantomSample healthy = generate(params, false, rng);
  const PhantomSample lesioned = generate(params, true, rng);
  CHECK(mask_area(healthy.ventricles) == mask_area(lesioned.ventricles));
  CHECK(healthy.ventricles == lesioned.ventricles);
}

TEST_CASE("enlargement law at a 300 px lesion with gain 2") {
  PhantomParams params;
  params.size = 64;
  params.brain_rx = 28.0;
  params.brain_ry = 26.0;
  params.ventricle_offset = 12.0;
  params.ventricle_radius = 4.0;
  params.enlargement_gain = 2.0;
  params.lesion_area_min = 150;
  params.lesion_area_max = 380;
  params.lesion_disk_rmin = 9.0;
  params.lesion_disk_rmax = 10.5;
  params.max_generation_retries = 256;
  params.validate();

  CHECK(enlarged_radius(params, 300) == doctest::Approx(10.0).epsilon(1e-12));  // base + 6

  const PhantomGeometry g = phantom_geometry(params);
  const int oracle = oracle_disk_count(params, g.vent_left_x, g.vent_y, 10.0);
  CHECK(expected_ventricle_area(params, LesionSide::left, 300) == oracle);
  CHECK(std::abs(oracle - 314.159) < 16.0);  // pi r^2 up to rasterization

  // A generated sample with an area in range obeys the same law.
  SeededRng rng(3);
  const PhantomSample s = generate(params, true, rng);
  CHECK(s.lesion_area >= 150);
  CHECK(s.lesion_area <= 380);
  const double r = enlarged_radius(params, s.lesion_area);
  const double vx = s.side == LesionSide::right ? g.vent_right_x : g.vent_left_x;
  CHECK(s.true_ipsi_ventricle_area == oracle_disk_count(params, vx, g.vent_y, r));
}

TEST_CASE("mask consistency invariants over many seeds") {
  const PhantomParams params;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    SeededRng rng(seed);
    const PhantomSample s = generate(params, true, rng);
    CHECK(mask_area(mask_intersect(s.pathology, mask_complement(s.brain))) == 0);   // p ⊆ b
    CHECK(mask_area(mask_intersect(s.ventricles, mask_complement(s.brain))) == 0);  // v ⊆ b
    CHECK(mask_area(mask_intersect(s.pathology, s.ventricles)) == 0);               // p ∩ v = ∅
    CHECK(s.lesion_area >= params.lesion_area_min);
    CHECK(s.lesion_area <= params.lesion_area_max);
    CHECK(lesion_side_of(s.pathology, params) == s.side);
  }
}

TEST_CASE("seeded determinism") {
  const PhantomParams params;
  SeededRng a(9), b(9);
  const PhantomSample s1 = generate(params, true, a);
  const PhantomSample s2 = generate(params, true, b);
  CHECK(s1.image == s2.image);
  CHECK(s1.pathology == s2.pathology);
  CHECK(s1.ventricles == s2.ventricles);
  CHECK(s1.side == s2.side);
}

TEST_CASE("conditional prior mean equals the independent expected-image oracle") {
  const PhantomParams params;
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    SeededRng rng(seed);
    const PhantomSample s = generate(params, true, rng);
    const PixelwiseGaussianPrior prior = conditional_prior(s.brain, s.pathology, params);
    prior.validate();
    const Image mean = prior.mean_image();
    const Image oracle = oracle_expected_image(params, s.pathology);
    for (size_t i = 0; i < mean.pixels.size(); ++i) {
      CHECK(mean.pixels[i] == doctest::Approx(oracle.pixels[i]).epsilon(1e-12));
    }
  }
  // Healthy case too.
  SeededRng rng(14);
  const PhantomSample h = generate(params, false, rng);
  const Image mean = conditional_prior(h.brain, h.pathology, params).mean_image();
  const Image oracle = oracle_expected_image(params, h.pathology);
  for (size_t i = 0; i < mean.pixels.size(); ++i) {
    CHECK(mean.pixels[i] == doctest::Approx(oracle.pixels[i]).epsilon(1e-12));
  }
}

TEST_CASE("conditional prior classifies the key pixel types") {
  const PhantomParams params;
  SeededRng rng(21);
  const PhantomSample s = generate(params, true, rng);
  const PixelwiseGaussianPrior prior = conditional_prior(s.brain, s.pathology, params);
  const PhantomGeometry g = phantom_geometry(params);

  // A corner pixel is background.
  CHECK(prior.components(0) == 1);
  CHECK(prior.mean[prior.offset[0]] == params.intensity_background);

  // Every pathology pixel carries the lesion mean.
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      if (s.pathology.at(y, x) == 0.0) continue;
      const size_t i = static_cast<size_t>(y) * params.size + x;
      CHECK(prior.components(i) == 1);
      CHECK(prior.mean[prior.offset[i]] == params.intensity_lesion);
    }
  }

  // The ventricle center is deep inside the (possibly enlarged) disk.
  const double vx = s.side == LesionSide::right ? g.vent_right_x : g.vent_left_x;
  const size_t center = static_cast<size_t>(std::lround(g.vent_y)) * params.size +
                        static_cast<size_t>(std::lround(vx));
  CHECK(prior.components(center) == 1);
  CHECK(prior.mean[prior.offset[center]] == params.intensity_ventricle);

  // An annulus pixel (inside the enlarged disk, outside the base disk) is
  // ventricle-valued: probe just inside the enlarged radius along +y.
  const double r = enlarged_radius(params, s.lesion_area);
  if (r - 1.0 > params.ventricle_radius + 0.5) {
    const int ay = static_cast<int>(std::lround(g.vent_y + r - 1.0));
    const int ax = static_cast<int>(std::lround(vx));
    const double dist = std::hypot(ax - vx, ay - g.vent_y);
    if (dist <= r - 0.5 && dist > params.ventricle_radius + 0.5) {
      const size_t i = static_cast<size_t>(ay) * params.size + ax;
      CHECK(prior.components(i) == 1);
      CHECK(prior.mean[prior.offset[i]] == params.intensity_ventricle);
    }
  }

  // Some boundary pixels carry the two-component mixture.
  int mixtures = 0;
  for (size_t i = 0; i < static_cast<size_t>(params.size) * params.size; ++i) {
    if (prior.components(i) == 2) ++mixtures;
  }
  CHECK(mixtures > 0);
}

TEST_CASE("conditional prior rejects inconsistent masks") {
  const PhantomParams params;
  SeededRng rng(31);
  const PhantomSample s = generate(params, true, rng);
  Image outside = s.pathology;
  outside.at(0, 0) = 1.0;  // corner is outside the brain
  CHECK_THROWS_AS(conditional_prior(s.brain, outside, params), MaskError);
  CHECK_THROWS_AS(conditional_prior(s.brain, Image::zeros(8, 8), params), ShapeError);
}

TEST_CASE("generation fails loudly when no lesion fits") {
  PhantomParams params;
  params.enlargement_gain = 0.0;  // keep the exclusion zone valid
  params.lesion_area_min = 5000;  // impossible at 32x32
  params.lesion_area_max = 6000;
  SeededRng rng(4);
  CHECK_THROWS_AS(generate(params, true, rng), GenerationError);
}

TEST_CASE("parameter validation") {
  PhantomParams params;
  params.intensity_lesion = params.intensity_tissue + 0.05;  // closer than 0.15
  CHECK_THROWS_AS(params.validate(), ConfigError);

  PhantomParams gain;
  gain.enlargement_gain = -1.0;
  CHECK_THROWS_AS(gain.validate(), ConfigError);

  PhantomParams big;
  big.enlargement_gain = 40.0;  // exclusion zone would leave the brain
  CHECK_THROWS_AS(big.validate(), ConfigError);
}

TEST_CASE("stratify splits 25/50/25 by rank") {
  const Stratification tiny = stratify({1, 2, 3, 4});
  REQUIRE(tiny.small.size() == 1);
  REQUIRE(tiny.large.size() == 1);
  REQUIRE(tiny.medium.size() == 2);
  CHECK(tiny.small[0] == 0);
  CHECK(tiny.large[0] == 3);
  CHECK(tiny.small_threshold == 1);
  CHECK(tiny.large_threshold == 4);

  const PhantomParams params;
  std::vector<int> areas;
  for (uint64_t seed = 100; seed < 200; ++seed) {
    SeededRng rng(seed);
    areas.push_back(generate(params, true, rng).lesion_area);
  }
  const Stratification s = stratify(areas);
  CHECK(s.small.size() == 25);
  CHECK(s.medium.size() == 50);
  CHECK(s.large.size() == 25);
  for (size_t i : s.small) CHECK(areas[i] <= s.small_threshold);
  for (size_t i : s.large) CHECK(areas[i] >= s.large_threshold);

  CHECK_THROWS_AS(stratify({}), std::invalid_argument);
}
