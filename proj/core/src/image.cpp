#include "cfdiff/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfdiff/errors.hpp"

namespace cfdiff {

Image::Image(int h, int w, double fill)
    : height(h), width(w), pixels(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {
  if (h < 0 || w < 0) {
    throw ShapeError("Image dimensions must be non-negative");
  }
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + ")");
  }
}

void require_binary(const Image& mask, const char* what) {
  for (double v : mask.pixels) {
    if (v != 0.0 && v != 1.0) {
      throw MaskError(std::string(what) + ": mask value " + std::to_string(v) +
                      " is not exactly 0 or 1");
    }
  }
}

bool all_finite(const Image& img) {
  return std::all_of(img.pixels.begin(), img.pixels.end(),
                     [](double v) { return std::isfinite(v); });
}

Image operator+(const Image& a, const Image& b) {
  require_same_shape(a, b, "operator+");
  Image out = a;
  for (size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] += b.pixels[i];
  return out;
}

Image operator-(const Image& a, const Image& b) {
  require_same_shape(a, b, "operator-");
  Image out = a;
  for (size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] -= b.pixels[i];
  return out;
}

Image operator*(double s, const Image& a) {
  Image out = a;
  for (double& v : out.pixels) v *= s;
  return out;
}

Image blend_masked(const Image& known, const Image& unknown, const Image& m) {
  require_same_shape(known, unknown, "blend_masked");
  require_same_shape(known, m, "blend_masked");
  Image out = known;
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    if (m.pixels[i] != 0.0) out.pixels[i] = unknown.pixels[i];
  }
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double mean_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_abs_diff");
  if (a.pixels.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) sum += std::abs(a.pixels[i] - b.pixels[i]);
  return sum / static_cast<double>(a.pixels.size());
}

double mean_abs_diff_in(const Image& a, const Image& b, const Image& region) {
  require_same_shape(a, b, "mean_abs_diff_in");
  require_same_shape(a, region, "mean_abs_diff_in");
  double sum = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    if (region.pixels[i] != 0.0) {
      sum += std::abs(a.pixels[i] - b.pixels[i]);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace cfdiff
