#include "cfdiff/prior.hpp"

#include <cmath>
#include <string>

#include "cfdiff/errors.hpp"

namespace cfdiff {

Image PixelwiseGaussianPrior::mean_image() const {
  Image out(height, width);
  for (size_t i = 0; i < out.pixels.size(); ++i) {
    double m = 0.0;
    for (int c = offset[i]; c < offset[i + 1]; ++c) m += weight[c] * mean[c];
    out.pixels[i] = m;
  }
  return out;
}

void PixelwiseGaussianPrior::validate() const {
  const size_t npix = static_cast<size_t>(height) * static_cast<size_t>(width);
  if (offset.size() != npix + 1 || offset.front() != 0 ||
      offset.back() != static_cast<int>(weight.size()) || weight.size() != mean.size() ||
      weight.size() != stddev.size()) {
    throw ConfigError("prior component layout inconsistent");
  }
  for (size_t i = 0; i < npix; ++i) {
    if (offset[i + 1] <= offset[i]) {
      throw ConfigError("prior pixel " + std::to_string(i) + " has no components");
    }
    double sum = 0.0;
    for (int c = offset[i]; c < offset[i + 1]; ++c) {
      if (weight[c] < 0.0 || !std::isfinite(mean[c]) || stddev[c] < 0.0) {
        throw ConfigError("prior pixel " + std::to_string(i) + " has an invalid component");
      }
      sum += weight[c];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("prior pixel " + std::to_string(i) + " weights sum to " +
                        std::to_string(sum));
    }
  }
}

}  // namespace cfdiff
