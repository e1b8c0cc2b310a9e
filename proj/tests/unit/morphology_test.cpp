#include <doctest.h>

#include "cfdiff/errors.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/rng.hpp"

using namespace cfdiff;

namespace {

// O(n^2 k^2) reference dilation: output pixel is 1 iff any input pixel within
// the (k-1)/2 Chebyshev (or Euclidean, for disks) neighborhood is 1.
Image brute_dilate(const Image& mask, int k, StructuringElement element) {
  const int r = (k - 1) / 2;
  Image out(mask.height, mask.width);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      double v = 0.0;
      for (int dy = -r; dy <= r && v == 0.0; ++dy) {
        for (int dx = -r; dx <= r && v == 0.0; ++dx) {
          if (element == StructuringElement::disk && dy * dy + dx * dx > r * r) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= mask.height || xx < 0 || xx >= mask.width) continue;
          v = mask.at(yy, xx);
        }
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

Image random_mask(int h, int w, double density, SeededRng& rng) {
  Image m(h, w);
  for (double& v : m.pixels) v = rng.next_uniform() < density ? 1.0 : 0.0;
  return m;
}

bool subset(const Image& a, const Image& b) {
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    if (a.pixels[i] != 0.0 && b.pixels[i] == 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("k = 1 is the identity") {
  SeededRng rng(1);
  const Image m = random_mask(16, 16, 0.2, rng);
  CHECK(dilate(m, 1) == m);
}

TEST_CASE("single center pixel grows to a k x k block") {
  Image m(9, 9);
  m.at(4, 4) = 1.0;
  const Image d = dilate(m, 3);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      const bool in_block = y >= 3 && y <= 5 && x >= 3 && x <= 5;
      CHECK(d.at(y, x) == (in_block ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("dilate matches the brute-force oracle pixel-exactly") {
  SeededRng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const Image m = random_mask(32, 32, 0.08, rng);
    for (const int k : {1, 3, 5, 9}) {
      CHECK(dilate(m, k) == brute_dilate(m, k, StructuringElement::square));
      CHECK(dilate(m, k, StructuringElement::disk) ==
            brute_dilate(m, k, StructuringElement::disk));
    }
  }
}

TEST_CASE("kernel validation") {
  const Image m(8, 8);
  CHECK_THROWS_AS(dilate(m, 2), ConfigError);
  CHECK_THROWS_AS(dilate(m, 0), ConfigError);
  CHECK_THROWS_AS(dilate(m, -5), ConfigError);
  Image bad(4, 4);
  bad.at(1, 1) = 0.5;
  CHECK_THROWS_AS(dilate(bad, 3), MaskError);
}

TEST_CASE("dilation is monotone in the mask and in k") {
  SeededRng rng(7);
  const Image m = random_mask(24, 24, 0.05, rng);
  const Image d3 = dilate(m, 3);
  const Image d7 = dilate(m, 7);
  CHECK(subset(m, d3));
  CHECK(subset(d3, d7));
}

TEST_CASE("translation equivariance on interior pixels") {
  Image m(32, 32);
  m.at(10, 12) = 1.0;
  m.at(11, 13) = 1.0;
  Image shifted(32, 32);
  shifted.at(14, 17) = 1.0;  // +(4, 5)
  shifted.at(15, 18) = 1.0;
  const Image dm = dilate(m, 5);
  const Image ds = dilate(shifted, 5);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) {
      CHECK(dm.at(y, x) == ds.at(y + 4, x + 5));
    }
  }
}

TEST_CASE("square-element composition law: dilate twice with k equals once with 2k-1") {
  SeededRng rng(31);
  const Image m = random_mask(28, 28, 0.06, rng);
  for (const int k : {3, 5}) {
    CHECK(dilate(dilate(m, k), k) == dilate(m, 2 * k - 1));
  }
}

TEST_CASE("mask set operations") {
  SeededRng rng(13);
  const Image empty(10, 10);
  CHECK(mask_area(empty) == 0);

  const Image a = random_mask(10, 10, 0.3, rng);
  CHECK(mask_area(mask_intersect(a, mask_complement(a))) == 0);

  // De Morgan over random masks.
  for (int trial = 0; trial < 20; ++trial) {
    const Image p = random_mask(12, 12, 0.4, rng);
    const Image q = random_mask(12, 12, 0.4, rng);
    CHECK(mask_complement(mask_union(p, q)) ==
          mask_intersect(mask_complement(p), mask_complement(q)));
  }

  const Image wrong(9, 10);
  CHECK_THROWS_AS(mask_intersect(a, wrong), ShapeError);
}
