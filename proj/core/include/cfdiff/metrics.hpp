#pragma once

#include <cstdint>
#include <vector>

#include "cfdiff/image.hpp"
#include "cfdiff/phantom.hpp"

namespace cfdiff {

// 2|a ∩ b| / (|a| + |b|); defined as 1.0 when both masks are empty.
double dice(const Image& a, const Image& b);

// Gaussian moment summary of a feature embedding: sample mean and covariance
// (divisor n-1). Covariance is symmetric and numerically PSD.
struct FeatureSet {
  int n = 0;
  int d = 0;
  std::vector<double> mean;  // length d
  std::vector<double> cov;   // d x d, row-major
};

// Flattens each image and maps it through a fixed seeded Gaussian projection
// (entries N(0, 1/npix), drawn once per seed — the FID backbone stand-in).
// Warns on stderr when n < d (rank-deficient covariance).
FeatureSet extract_features(const std::vector<Image>& images, uint64_t projection_seed,
                            int dim = 64);

// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}), the matrix square
// root taken by symmetric eigendecomposition of sqrt(S_a) S_b sqrt(S_a) with
// tiny negative eigenvalues clipped to zero.
double frechet_distance(const FeatureSet& a, const FeatureSet& b);

// Threshold segmenter oracle: pixels within half the minimum intensity gap of
// the lesion level, inside the brain ellipse, connected components below
// 3 px removed. Deterministic; may return an empty mask.
Image segment_lesion(const Image& image, const PhantomParams& params);

// |measured - expected| ipsilateral ventricle area in pixels. The ventricle
// is segmented by intensity (nearest of ventricle/tissue level) on the
// lesion's half, excluding p; the expectation comes from the enlargement law.
// Raises MetricError when p is empty (side undeterminable).
double indirect_effect_error(const Image& counterfactual, const Image& brain,
                             const Image& pathology, const PhantomParams& params);

}  // namespace cfdiff
