#include "cfdiff/morphology.hpp"

#include <algorithm>
#include <string>

#include "cfdiff/errors.hpp"

namespace cfdiff {

namespace {

void check_kernel(int k) {
  if (k < 1 || k % 2 == 0) {
    throw ConfigError("dilation kernel size k = " + std::to_string(k) + " must be odd and >= 1");
  }
}

Image dilate_square(const Image& mask, int r) {
  const int h = mask.height;
  const int w = mask.width;
  // Separable max filter: horizontal pass then vertical pass.
  Image tmp = Image::zeros(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      const int lo = std::max(0, x - r);
      const int hi = std::min(w - 1, x + r);
      for (int xx = lo; xx <= hi && v == 0.0; ++xx) v = mask.at(y, xx);
      tmp.at(y, x) = v;
    }
  }
  Image out = Image::zeros(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      const int lo = std::max(0, y - r);
      const int hi = std::min(h - 1, y + r);
      for (int yy = lo; yy <= hi && v == 0.0; ++yy) v = tmp.at(yy, x);
      out.at(y, x) = v;
    }
  }
  return out;
}

Image dilate_disk(const Image& mask, int r) {
  const int h = mask.height;
  const int w = mask.width;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dy * dy + dx * dx <= r * r) offsets.emplace_back(dy, dx);
    }
  }
  Image out = Image::zeros(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(y, x) == 0.0) continue;
      for (auto [dy, dx] : offsets) {
        const int yy = y + dy;
        const int xx = x + dx;
        if (yy >= 0 && yy < h && xx >= 0 && xx < w) out.at(yy, xx) = 1.0;
      }
    }
  }
  return out;
}

}  // namespace

Image dilate(const Image& mask, int k, StructuringElement element) {
  check_kernel(k);
  require_binary(mask, "dilate");
  const int r = (k - 1) / 2;
  if (r == 0) return mask;
  return element == StructuringElement::square ? dilate_square(mask, r) : dilate_disk(mask, r);
}

Image mask_intersect(const Image& a, const Image& b) {
  require_same_shape(a, b, "mask_intersect");
  require_binary(a, "mask_intersect");
  require_binary(b, "mask_intersect");
  Image out = a;
  for (size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = a.pixels[i] * b.pixels[i];
  return out;
}

Image mask_union(const Image& a, const Image& b) {
  require_same_shape(a, b, "mask_union");
  require_binary(a, "mask_union");
  require_binary(b, "mask_union");
  Image out = a;
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = (a.pixels[i] != 0.0 || b.pixels[i] != 0.0) ? 1.0 : 0.0;
  }
  return out;
}

Image mask_complement(const Image& a) {
  require_binary(a, "mask_complement");
  Image out = a;
  for (double& v : out.pixels) v = 1.0 - v;
  return out;
}

int mask_area(const Image& a) {
  require_binary(a, "mask_area");
  int n = 0;
  for (double v : a.pixels) n += v != 0.0;
  return n;
}

}  // namespace cfdiff
