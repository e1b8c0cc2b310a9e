#pragma once

#include <vector>

#include "cfdiff/image.hpp"

namespace cfdiff {

// Per-pixel Gaussian mixture describing the phantom's conditional pixel
// distribution given (brain mask, pathology mask). Components for pixel i
// live in the flattened arrays at [offset[i], offset[i+1]). Most pixels carry
// a single component; anti-aliased ventricle boundary pixels carry two.
struct PixelwiseGaussianPrior {
  int height = 0;
  int width = 0;
  std::vector<int> offset;      // size height*width + 1
  std::vector<double> weight;   // per pixel: non-negative, sums to 1
  std::vector<double> mean;
  std::vector<double> stddev;   // >= 0; 0 denotes a point mass

  int components(size_t pixel) const {
    return offset[pixel + 1] - offset[pixel];
  }

  // Weighted mean per pixel: the phantom's expected (noise-free) image.
  Image mean_image() const;

  // Validates weights, stddevs and offsets; throws ConfigError on violation.
  void validate() const;
};

}  // namespace cfdiff
