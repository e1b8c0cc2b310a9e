#include "cfdiff/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "cfdiff/errors.hpp"

namespace cfdiff {

namespace {

double sq(double v) { return v * v; }

bool inside_ellipse(const PhantomParams& p, const PhantomGeometry& g, double x, double y) {
  return sq((x - g.cx) / p.brain_rx) + sq((y - g.cy) / p.brain_ry) <= 1.0;
}

// Coverage of a pixel center by a disk, anti-aliased over a 1 px band:
// 1 well inside, 0 well outside, linear in between. The half-open band keeps
// the w >= 0.5 region identical to {dist <= radius}.
double disk_coverage(double dist, double radius) {
  return std::clamp(radius - dist + 0.5, 0.0, 1.0);
}

struct TissueComponent {
  double mean;
  double stddev;
  double weight;
};

// The phantom's generative law for one pixel. Shared verbatim by generate()
// and conditional_prior() so the prior is the model by construction.
int pixel_components(const PhantomParams& params, const PhantomGeometry& g,
                     const Image& pathology, double ipsi_radius, double contra_radius,
                     bool lesion_left, int y, int x, TissueComponent out[2]) {
  if (!inside_ellipse(params, g, x, y)) {
    out[0] = {params.intensity_background, params.noise_background, 1.0};
    return 1;
  }
  if (pathology.at(y, x) != 0.0) {
    out[0] = {params.intensity_lesion, params.noise_lesion, 1.0};
    return 1;
  }
  const double left_r = lesion_left ? ipsi_radius : contra_radius;
  const double right_r = lesion_left ? contra_radius : ipsi_radius;
  const double dl = std::hypot(x - g.vent_left_x, y - g.vent_y);
  const double dr = std::hypot(x - g.vent_right_x, y - g.vent_y);
  const double w = std::max(disk_coverage(dl, left_r), disk_coverage(dr, right_r));
  if (w >= 1.0) {
    out[0] = {params.intensity_ventricle, params.noise_ventricle, 1.0};
    return 1;
  }
  if (w <= 0.0) {
    out[0] = {params.intensity_tissue, params.noise_tissue, 1.0};
    return 1;
  }
  out[0] = {params.intensity_ventricle, params.noise_ventricle, w};
  out[1] = {params.intensity_tissue, params.noise_tissue, 1.0 - w};
  return 2;
}

int disk_pixel_count(const PhantomParams& params, double cx, double cy, double radius) {
  int n = 0;
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      if (std::hypot(x - cx, y - cy) <= radius) ++n;
    }
  }
  return n;
}

}  // namespace

void PhantomParams::validate() const {
  if (size < 16) {
    throw ConfigError("phantom size " + std::to_string(size) + " must be >= 16");
  }
  const double c = (size - 1) / 2.0;
  if (brain_rx <= 0.0 || brain_ry <= 0.0 || c - brain_rx < 0.0 || c - brain_ry < 0.0) {
    throw ConfigError("brain ellipse does not fit inside the image");
  }
  const double levels[4] = {intensity_background, intensity_ventricle, intensity_tissue,
                            intensity_lesion};
  for (double v : levels) {
    if (v < 0.0 || v > 1.0) {
      throw ConfigError("intensity level " + std::to_string(v) + " outside [0, 1]");
    }
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (std::abs(levels[i] - levels[j]) < 0.15) {
        throw ConfigError("intensity levels " + std::to_string(levels[i]) + " and " +
                          std::to_string(levels[j]) + " closer than 0.15");
      }
    }
  }
  if (enlargement_gain < 0.0) {
    throw ConfigError("enlargement gain must be >= 0");
  }
  if (noise_background < 0.0 || noise_ventricle < 0.0 || noise_tissue < 0.0 ||
      noise_lesion < 0.0) {
    throw ConfigError("noise std must be >= 0");
  }
  if (ventricle_radius <= 0.0 || ventricle_offset <= 0.0) {
    throw ConfigError("ventricle geometry must be positive");
  }
  if (lesion_area_min < 1 || lesion_area_max < lesion_area_min) {
    throw ConfigError("lesion area range [" + std::to_string(lesion_area_min) + ", " +
                      std::to_string(lesion_area_max) + "] is invalid");
  }
  if (lesion_disk_rmin <= 0.0 || lesion_disk_rmax < lesion_disk_rmin) {
    throw ConfigError("lesion disk radius range is invalid");
  }
  // The ventricle exclusion disks (maximum enlargement + 1 px margin) must
  // stay inside the brain.
  const PhantomGeometry g = phantom_geometry(*this);
  for (double vx : {g.vent_left_x, g.vent_right_x}) {
    for (int i = 0; i < 64; ++i) {
      const double a = 2.0 * std::numbers::pi * i / 64.0;
      const double x = vx + g.exclusion_radius * std::cos(a);
      const double y = g.vent_y + g.exclusion_radius * std::sin(a);
      if (!inside_ellipse(*this, g, x, y)) {
        throw ConfigError("ventricle exclusion zone leaves the brain ellipse");
      }
    }
  }
}

PhantomGeometry phantom_geometry(const PhantomParams& params) {
  PhantomGeometry g;
  g.cx = (params.size - 1) / 2.0;
  g.cy = (params.size - 1) / 2.0;
  g.vent_left_x = g.cx - params.ventricle_offset;
  g.vent_right_x = g.cx + params.ventricle_offset;
  g.vent_y = g.cy;
  g.exclusion_radius =
      params.ventricle_radius + params.enlargement_gain * params.lesion_area_max / 100.0 + 1.0;
  return g;
}

double enlarged_radius(const PhantomParams& params, int lesion_area) {
  return params.ventricle_radius + params.enlargement_gain * lesion_area / 100.0;
}

int expected_ventricle_area(const PhantomParams& params, LesionSide side, int lesion_area) {
  const PhantomGeometry g = phantom_geometry(params);
  const double r =
      side == LesionSide::none ? params.ventricle_radius : enlarged_radius(params, lesion_area);
  const double vx = side == LesionSide::right ? g.vent_right_x : g.vent_left_x;
  return disk_pixel_count(params, vx, g.vent_y, r);
}

LesionSide lesion_side_of(const Image& pathology, const PhantomParams& params) {
  const PhantomGeometry g = phantom_geometry(params);
  double sum_x = 0.0;
  int n = 0;
  for (int y = 0; y < pathology.height; ++y) {
    for (int x = 0; x < pathology.width; ++x) {
      if (pathology.at(y, x) != 0.0) {
        sum_x += x;
        ++n;
      }
    }
  }
  if (n == 0) return LesionSide::none;
  return sum_x / n < g.cx ? LesionSide::left : LesionSide::right;
}

Image render_brain_mask(const PhantomParams& params) {
  const PhantomGeometry g = phantom_geometry(params);
  Image b(params.size, params.size);
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      b.at(y, x) = inside_ellipse(params, g, x, y) ? 1.0 : 0.0;
    }
  }
  return b;
}

namespace {

// Lesion blob: 1-3 disks seeded in the band just outside the ipsilateral
// exclusion zone, carved to brain ∩ strict half-plane ∖ exclusion disks.
Image draw_lesion(const PhantomParams& params, const PhantomGeometry& g, LesionSide side,
                  SeededRng& rng) {
  const double vx = side == LesionSide::right ? g.vent_right_x : g.vent_left_x;
  const int n_disks = 1 + static_cast<int>(rng.next_index(3));
  struct Disk {
    double x, y, r;
  };
  std::vector<Disk> disks;
  const double band_lo = g.exclusion_radius + 0.5;
  const double band_hi = g.exclusion_radius + 2.5;
  const double angle = 2.0 * std::numbers::pi * rng.next_uniform();
  const double dist = band_lo + (band_hi - band_lo) * rng.next_uniform();
  Disk first{vx + dist * std::cos(angle), g.vent_y + dist * std::sin(angle),
             params.lesion_disk_rmin +
                 (params.lesion_disk_rmax - params.lesion_disk_rmin) * rng.next_uniform()};
  disks.push_back(first);
  for (int i = 1; i < n_disks; ++i) {
    Disk d;
    d.x = first.x + (rng.next_uniform() * 2.0 - 1.0) * 2.5;
    d.y = first.y + (rng.next_uniform() * 2.0 - 1.0) * 2.5;
    d.r = params.lesion_disk_rmin +
          (params.lesion_disk_rmax - params.lesion_disk_rmin) * rng.next_uniform();
    disks.push_back(d);
  }

  Image p(params.size, params.size);
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      bool in = false;
      for (const Disk& d : disks) {
        if (std::hypot(x - d.x, y - d.y) <= d.r) {
          in = true;
          break;
        }
      }
      if (!in) continue;
      if (!inside_ellipse(params, g, x, y)) continue;
      if (side == LesionSide::left ? x >= g.cx : x <= g.cx) continue;
      if (std::hypot(x - g.vent_left_x, y - g.vent_y) <= g.exclusion_radius) continue;
      if (std::hypot(x - g.vent_right_x, y - g.vent_y) <= g.exclusion_radius) continue;
      p.at(y, x) = 1.0;
    }
  }
  return p;
}

}  // namespace

PhantomSample generate(const PhantomParams& params, bool with_lesion, SeededRng& rng) {
  params.validate();
  const PhantomGeometry g = phantom_geometry(params);

  PhantomSample s;
  s.brain = render_brain_mask(params);
  s.pathology = Image::zeros(params.size, params.size);
  s.side = LesionSide::none;
  s.lesion_area = 0;

  if (with_lesion) {
    s.side = rng.next_index(2) == 0 ? LesionSide::left : LesionSide::right;
    bool placed = false;
    for (int attempt = 0; attempt < params.max_generation_retries; ++attempt) {
      Image p = draw_lesion(params, g, s.side, rng);
      int area = 0;
      for (double v : p.pixels) area += v != 0.0;
      if (area >= params.lesion_area_min && area <= params.lesion_area_max) {
        s.pathology = std::move(p);
        s.lesion_area = area;
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw GenerationError("no admissible lesion after " +
                            std::to_string(params.max_generation_retries) + " retries");
    }
  }

  const double ipsi_r = with_lesion ? enlarged_radius(params, s.lesion_area)
                                    : params.ventricle_radius;
  const double contra_r = params.ventricle_radius;
  const bool lesion_left = s.side != LesionSide::right;  // healthy: symmetric anyway

  s.ventricles = Image::zeros(params.size, params.size);
  const double left_r = lesion_left ? ipsi_r : contra_r;
  const double right_r = lesion_left ? contra_r : ipsi_r;
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      const bool in_left = std::hypot(x - g.vent_left_x, y - g.vent_y) <= left_r;
      const bool in_right = std::hypot(x - g.vent_right_x, y - g.vent_y) <= right_r;
      if (in_left || in_right) s.ventricles.at(y, x) = 1.0;
    }
  }
  const double ipsi_x = s.side == LesionSide::right ? g.vent_right_x : g.vent_left_x;
  s.true_ipsi_ventricle_area = disk_pixel_count(params, ipsi_x, g.vent_y, ipsi_r);

  // Draw the image from the per-pixel mixture, row-major. Two-component
  // pixels consume one uniform (component pick) plus one normal; single
  // component pixels consume one normal.
  s.image = Image::zeros(params.size, params.size);
  TissueComponent comps[2];
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      const int k =
          pixel_components(params, g, s.pathology, ipsi_r, contra_r, lesion_left, y, x, comps);
      int pick = 0;
      if (k == 2 && rng.next_uniform() >= comps[0].weight) pick = 1;
      s.image.at(y, x) = comps[pick].mean + comps[pick].stddev * rng.next_normal();
    }
  }
  return s;
}

PixelwiseGaussianPrior conditional_prior(const Image& brain, const Image& pathology,
                                         const PhantomParams& params) {
  params.validate();
  if (brain.height != params.size || brain.width != params.size) {
    throw ShapeError("conditional_prior: brain mask shape does not match params.size");
  }
  require_same_shape(brain, pathology, "conditional_prior");
  require_binary(brain, "conditional_prior");
  require_binary(pathology, "conditional_prior");
  for (size_t i = 0; i < pathology.pixels.size(); ++i) {
    if (pathology.pixels[i] != 0.0 && brain.pixels[i] == 0.0) {
      throw MaskError("conditional_prior: pathology mask is not a subset of the brain mask");
    }
  }

  const PhantomGeometry g = phantom_geometry(params);
  const LesionSide side = lesion_side_of(pathology, params);
  int area = 0;
  for (double v : pathology.pixels) area += v != 0.0;
  const double ipsi_r =
      side == LesionSide::none ? params.ventricle_radius : enlarged_radius(params, area);
  const double contra_r = params.ventricle_radius;
  const bool lesion_left = side != LesionSide::right;

  PixelwiseGaussianPrior prior;
  prior.height = params.size;
  prior.width = params.size;
  prior.offset.reserve(static_cast<size_t>(params.size) * params.size + 1);
  prior.offset.push_back(0);
  TissueComponent comps[2];
  for (int y = 0; y < params.size; ++y) {
    for (int x = 0; x < params.size; ++x) {
      const int k = pixel_components(params, g, pathology, ipsi_r, contra_r, lesion_left, y, x,
                                     comps);
      for (int c = 0; c < k; ++c) {
        prior.weight.push_back(comps[c].weight);
        prior.mean.push_back(comps[c].mean);
        prior.stddev.push_back(comps[c].stddev);
      }
      prior.offset.push_back(static_cast<int>(prior.weight.size()));
    }
  }
  return prior;
}

Stratification stratify(const std::vector<int>& lesion_areas) {
  if (lesion_areas.empty()) {
    throw std::invalid_argument("stratify: empty input");
  }
  const size_t n = lesion_areas.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return lesion_areas[a] != lesion_areas[b] ? lesion_areas[a] < lesion_areas[b] : a < b;
  });
  const size_t n_small = n / 4;
  const size_t n_large = n / 4;
  Stratification out;
  for (size_t i = 0; i < n; ++i) {
    if (i < n_small) {
      out.small.push_back(order[i]);
    } else if (i >= n - n_large) {
      out.large.push_back(order[i]);
    } else {
      out.medium.push_back(order[i]);
    }
  }
  out.small_threshold = out.small.empty() ? 0 : lesion_areas[out.small.back()];
  out.large_threshold = out.large.empty() ? 0 : lesion_areas[out.large.front()];
  return out;
}

}  // namespace cfdiff
