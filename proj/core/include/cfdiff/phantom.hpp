#pragma once

#include <cstddef>
#include <vector>

#include "cfdiff/image.hpp"
#include "cfdiff/prior.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff {

enum class LesionSide { none, left, right };

// Synthetic brain phantom: an elliptical brain with two ventricles and an
// optional peri-ventricular lesion blob. A lesion of area A enlarges the
// ipsilateral ventricle radius by enlargement_gain * A / 100 pixels — the
// indirect pathological effect the editing methods are scored on.
//
// The conditional distribution of every pixel given (brain mask, pathology
// mask) is known exactly (conditional_prior), which is what makes a
// closed-form Bayes-optimal denoiser possible.
struct PhantomParams {
  int size = 32;

  double brain_rx = 12.0;  // ellipse semi-axes, centered on the image
  double brain_ry = 9.0;

  double ventricle_offset = 5.0;  // |x - cx| of each ventricle center
  double ventricle_radius = 2.5;
  double enlargement_gain = 3.0;  // radius pixels per 100 lesion pixels

  double intensity_background = 0.0;
  double intensity_ventricle = 0.25;
  double intensity_tissue = 0.65;
  double intensity_lesion = 0.85;

  double noise_background = 0.02;
  double noise_ventricle = 0.02;
  double noise_tissue = 0.02;
  double noise_lesion = 0.02;

  int lesion_area_min = 6;
  int lesion_area_max = 60;
  double lesion_disk_rmin = 1.5;
  double lesion_disk_rmax = 3.5;
  int max_generation_retries = 64;

  // Intensities must stay pairwise >= 0.15 apart so the threshold segmenter
  // oracles remain well-posed; geometry must fit inside the brain ellipse.
  void validate() const;
};

struct PhantomGeometry {
  double cx = 0.0, cy = 0.0;          // image center, pixel-center convention
  double vent_left_x = 0.0;
  double vent_right_x = 0.0;
  double vent_y = 0.0;
  double exclusion_radius = 0.0;      // lesions never enter this disk around
                                      // either ventricle (covers the maximum
                                      // possible enlargement plus 1 px)
};

PhantomGeometry phantom_geometry(const PhantomParams& params);

struct PhantomSample {
  Image image;
  Image brain;       // b
  Image pathology;   // p (empty for healthy samples)
  Image ventricles;  // both ventricle disks, at their true (enlarged) radii
  LesionSide side = LesionSide::none;
  int lesion_area = 0;
  int true_ipsi_ventricle_area = 0;  // base-radius disk area when healthy
};

// Draws one phantom. Lesions are unions of 1-3 disks placed just outside the
// ipsilateral ventricle exclusion zone, carved to the brain and to one strict
// half of the image (so the side is recoverable from p alone). Raises
// GenerationError when no admissible lesion is found within the retry budget.
PhantomSample generate(const PhantomParams& params, bool with_lesion, SeededRng& rng);

// Exact conditional pixel distribution given the masks. The lesion side and
// area — hence the enlarged ventricle — are inferred from p. Raises MaskError
// if p is not a binary subset of b.
PixelwiseGaussianPrior conditional_prior(const Image& brain, const Image& pathology,
                                         const PhantomParams& params);

double enlarged_radius(const PhantomParams& params, int lesion_area);

// Discrete pixel count of the ipsilateral ventricle disk implied by the
// enlargement law (side = none gives the base-radius disk).
int expected_ventricle_area(const PhantomParams& params, LesionSide side, int lesion_area);

// Side inference from the pathology-mask centroid; none when p is empty.
LesionSide lesion_side_of(const Image& pathology, const PhantomParams& params);

Image render_brain_mask(const PhantomParams& params);

struct Stratification {
  std::vector<size_t> small;   // indices into the input, first quartile
  std::vector<size_t> medium;  // middle half
  std::vector<size_t> large;   // last quartile
  int small_threshold = 0;     // largest area in the small group
  int large_threshold = 0;     // smallest area in the large group
};

// Rank-based 25/50/25 partition of lesion areas (ties broken by index).
Stratification stratify(const std::vector<int>& lesion_areas);

}  // namespace cfdiff
