#pragma once

#include <cstddef>
#include <vector>

namespace cfdiff {

// Dense H x W grid of doubles, row-major. Phantom-domain images live in
// [0,1]; intermediate diffusion states x_t are unbounded and only clamped at
// export time. Binary masks reuse this type with values exactly 0 or 1.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, double fill = 0.0);

  static Image zeros(int h, int w) { return Image(h, w, 0.0); }
  static Image constant(int h, int w, double v) { return Image(h, w, v); }

  double& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }

  size_t size() const { return pixels.size(); }
  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width;
  }
  bool operator==(const Image& other) const = default;
};

// Throws ShapeError unless a and b have identical dimensions.
void require_same_shape(const Image& a, const Image& b, const char* what);

// Throws MaskError unless every pixel is exactly 0 or 1.
void require_binary(const Image& mask, const char* what);

bool all_finite(const Image& img);

// Elementwise helpers used across the samplers.
Image operator+(const Image& a, const Image& b);
Image operator-(const Image& a, const Image& b);
Image operator*(double s, const Image& a);

// (1 - m) * known + m * unknown, elementwise; m must be binary.
Image blend_masked(const Image& known, const Image& unknown, const Image& m);

Image clamp01(const Image& img);

double mean_abs_diff(const Image& a, const Image& b);

// Mean of |a - b| restricted to pixels where region == 1; 0 if region empty.
double mean_abs_diff_in(const Image& a, const Image& b, const Image& region);

}  // namespace cfdiff
