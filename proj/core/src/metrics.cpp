#include "cfdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfdiff/errors.hpp"
#include "cfdiff/rng.hpp"

namespace cfdiff {

double dice(const Image& a, const Image& b) {
  require_same_shape(a, b, "dice");
  require_binary(a, "dice");
  require_binary(b, "dice");
  int na = 0, nb = 0, inter = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const bool ia = a.pixels[i] != 0.0;
    const bool ib = b.pixels[i] != 0.0;
    na += ia;
    nb += ib;
    inter += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * inter / static_cast<double>(na + nb);
}

FeatureSet extract_features(const std::vector<Image>& images, uint64_t projection_seed,
                            int dim) {
  if (images.empty()) {
    throw std::invalid_argument("extract_features: empty image list");
  }
  if (dim < 1) {
    throw ConfigError("extract_features: dimension must be >= 1");
  }
  const size_t npix = images.front().pixels.size();
  for (const Image& img : images) {
    require_same_shape(images.front(), img, "extract_features");
  }

  // Fixed projection, one draw per seed: row-major [dim][npix], N(0, 1/npix).
  SeededRng rng(projection_seed);
  std::vector<double> projection(static_cast<size_t>(dim) * npix);
  const double scale = 1.0 / std::sqrt(static_cast<double>(npix));
  for (double& v : projection) v = scale * rng.next_normal();

  const int n = static_cast<int>(images.size());
  if (n < dim) {
    std::cerr << "extract_features: n = " << n << " samples < d = " << dim
              << " features; covariance is rank-deficient\n";
  }

  std::vector<double> feats(static_cast<size_t>(n) * dim);
  for (int i = 0; i < n; ++i) {
    const std::vector<double>& px = images[i].pixels;
    for (int j = 0; j < dim; ++j) {
      const double* row = projection.data() + static_cast<size_t>(j) * npix;
      double acc = 0.0;
      for (size_t k = 0; k < npix; ++k) acc += row[k] * px[k];
      feats[static_cast<size_t>(i) * dim + j] = acc;
    }
  }

  FeatureSet fs;
  fs.n = n;
  fs.d = dim;
  fs.mean.assign(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) fs.mean[j] += feats[static_cast<size_t>(i) * dim + j];
  }
  for (double& m : fs.mean) m /= n;

  fs.cov.assign(static_cast<size_t>(dim) * dim, 0.0);
  if (n > 1) {
    for (int i = 0; i < n; ++i) {
      const double* row = feats.data() + static_cast<size_t>(i) * dim;
      for (int j = 0; j < dim; ++j) {
        const double dj = row[j] - fs.mean[j];
        for (int k = j; k < dim; ++k) {
          fs.cov[static_cast<size_t>(j) * dim + k] += dj * (row[k] - fs.mean[k]);
        }
      }
    }
    for (int j = 0; j < dim; ++j) {
      for (int k = j; k < dim; ++k) {
        const double v = fs.cov[static_cast<size_t>(j) * dim + k] / (n - 1);
        fs.cov[static_cast<size_t>(j) * dim + k] = v;
        fs.cov[static_cast<size_t>(k) * dim + j] = v;
      }
    }
  }
  return fs;
}

namespace {

// Cyclic Jacobi eigendecomposition for a symmetric matrix. Plenty at d <= 64.
void jacobi_eigen(std::vector<double> a, int d, std::vector<double>& values,
                  std::vector<double>& vectors) {
  vectors.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) vectors[static_cast<size_t>(i) * d + i] = 1.0;

  auto at = [&](std::vector<double>& m, int r, int c) -> double& {
    return m[static_cast<size_t>(r) * d + c];
  };

  double frob = 0.0;
  for (double v : a) frob += v * v;
  const double stop = 1e-24 * std::max(frob, 1.0);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) off += at(a, p, q) * at(a, p, q);
    }
    if (off < stop) break;

    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double apq = at(a, p, q);
        if (apq == 0.0) continue;
        const double app = at(a, p, p);
        const double aqq = at(a, q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int k = 0; k < d; ++k) {
          const double akp = at(a, k, p);
          const double akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          const double apk = at(a, p, k);
          const double aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          const double vkp = at(vectors, k, p);
          const double vkq = at(vectors, k, q);
          at(vectors, k, p) = c * vkp - s * vkq;
          at(vectors, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(d);
  for (int i = 0; i < d; ++i) values[i] = a[static_cast<size_t>(i) * d + i];
}

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, int d) {
  std::vector<double> out(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      const double aik = a[static_cast<size_t>(i) * d + k];
      if (aik == 0.0) continue;
      const double* brow = b.data() + static_cast<size_t>(k) * d;
      double* orow = out.data() + static_cast<size_t>(i) * d;
      for (int j = 0; j < d; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

// V diag(f(lambda)) V^T with eigenvalues clipped at zero before f.
std::vector<double> spectral_apply(const std::vector<double>& sym, int d, double (*f)(double)) {
  std::vector<double> values, vectors;
  jacobi_eigen(sym, d, values, vectors);
  std::vector<double> out(static_cast<size_t>(d) * d, 0.0);
  for (int k = 0; k < d; ++k) {
    const double fl = f(std::max(0.0, values[k]));
    if (fl == 0.0) continue;
    for (int i = 0; i < d; ++i) {
      const double vik = vectors[static_cast<size_t>(i) * d + k];
      for (int j = 0; j < d; ++j) {
        out[static_cast<size_t>(i) * d + j] += fl * vik * vectors[static_cast<size_t>(j) * d + k];
      }
    }
  }
  return out;
}

}  // namespace

double frechet_distance(const FeatureSet& a, const FeatureSet& b) {
  if (a.d != b.d) {
    throw ShapeError("frechet_distance: feature dimensions differ (" + std::to_string(a.d) +
                     " vs " + std::to_string(b.d) + ")");
  }
  const int d = a.d;
  if (static_cast<int>(a.mean.size()) != d || static_cast<int>(b.mean.size()) != d ||
      a.cov.size() != static_cast<size_t>(d) * d || b.cov.size() != static_cast<size_t>(d) * d) {
    throw ShapeError("frechet_distance: moment arrays do not match d");
  }
  for (double v : a.mean) {
    if (!std::isfinite(v)) throw std::invalid_argument("frechet_distance: non-finite mean");
  }
  for (double v : b.mean) {
    if (!std::isfinite(v)) throw std::invalid_argument("frechet_distance: non-finite mean");
  }
  for (double v : a.cov) {
    if (!std::isfinite(v)) throw std::invalid_argument("frechet_distance: non-finite covariance");
  }
  for (double v : b.cov) {
    if (!std::isfinite(v)) throw std::invalid_argument("frechet_distance: non-finite covariance");
  }

  double mean_term = 0.0;
  for (int i = 0; i < d; ++i) {
    const double diff = a.mean[i] - b.mean[i];
    mean_term += diff * diff;
  }

  const std::vector<double> sqrt_a = spectral_apply(a.cov, d, [](double x) { return std::sqrt(x); });
  std::vector<double> inner = matmul(matmul(sqrt_a, b.cov, d), sqrt_a, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double sym = 0.5 * (inner[static_cast<size_t>(i) * d + j] +
                                inner[static_cast<size_t>(j) * d + i]);
      inner[static_cast<size_t>(i) * d + j] = sym;
      inner[static_cast<size_t>(j) * d + i] = sym;
    }
  }
  std::vector<double> values, vectors;
  jacobi_eigen(inner, d, values, vectors);
  double trace_sqrt = 0.0;
  for (double v : values) trace_sqrt += std::sqrt(std::max(0.0, v));

  double trace_term = 0.0;
  for (int i = 0; i < d; ++i) {
    trace_term += a.cov[static_cast<size_t>(i) * d + i] + b.cov[static_cast<size_t>(i) * d + i];
  }
  double result = mean_term + trace_term - 2.0 * trace_sqrt;
  if (result < 0.0 && result > -1e-6) result = 0.0;
  return result;
}

namespace {

// Removes 8-connected components smaller than min_size.
void drop_small_components(Image& mask, int min_size) {
  const int h = mask.height, w = mask.width;
  std::vector<int> label(static_cast<size_t>(h) * w, -1);
  std::vector<size_t> stack;
  int next = 0;
  for (int start = 0; start < h * w; ++start) {
    if (mask.pixels[start] == 0.0 || label[start] >= 0) continue;
    stack.assign(1, static_cast<size_t>(start));
    label[start] = next;
    std::vector<size_t> members;
    while (!stack.empty()) {
      const size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      const int y = static_cast<int>(i) / w;
      const int x = static_cast<int>(i) % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          const size_t j = static_cast<size_t>(yy) * w + xx;
          if (mask.pixels[j] != 0.0 && label[j] < 0) {
            label[j] = next;
            stack.push_back(j);
          }
        }
      }
    }
    if (static_cast<int>(members.size()) < min_size) {
      for (size_t i : members) mask.pixels[i] = 0.0;
    }
    ++next;
  }
}

double min_gap_to_lesion(const PhantomParams& p) {
  const double gaps[3] = {std::abs(p.intensity_lesion - p.intensity_background),
                          std::abs(p.intensity_lesion - p.intensity_ventricle),
                          std::abs(p.intensity_lesion - p.intensity_tissue)};
  return std::min({gaps[0], gaps[1], gaps[2]});
}

}  // namespace

Image segment_lesion(const Image& image, const PhantomParams& params) {
  const Image brain = render_brain_mask(params);
  require_same_shape(image, brain, "segment_lesion");
  const double band = 0.5 * min_gap_to_lesion(params);
  Image mask(image.height, image.width);
  for (size_t i = 0; i < image.pixels.size(); ++i) {
    mask.pixels[i] = (brain.pixels[i] != 0.0 &&
                      std::abs(image.pixels[i] - params.intensity_lesion) <= band)
                         ? 1.0
                         : 0.0;
  }
  drop_small_components(mask, 3);
  return mask;
}

double indirect_effect_error(const Image& counterfactual, const Image& brain,
                             const Image& pathology, const PhantomParams& params) {
  require_same_shape(counterfactual, brain, "indirect_effect_error");
  require_same_shape(counterfactual, pathology, "indirect_effect_error");
  const LesionSide side = lesion_side_of(pathology, params);
  if (side == LesionSide::none) {
    throw MetricError("indirect_effect_error: pathology mask is empty, side undeterminable");
  }
  int lesion_area = 0;
  for (double v : pathology.pixels) lesion_area += v != 0.0;
  const int expected = expected_ventricle_area(params, side, lesion_area);

  const PhantomGeometry g = phantom_geometry(params);
  // Nearest-of-{ventricle, tissue} classification: the half-gap band maps the
  // anti-aliased boundary blend to exactly {coverage >= 1/2} = {dist <= r}.
  const double band = 0.5 * std::abs(params.intensity_tissue - params.intensity_ventricle);
  int measured = 0;
  for (int y = 0; y < counterfactual.height; ++y) {
    for (int x = 0; x < counterfactual.width; ++x) {
      if (brain.at(y, x) == 0.0 || pathology.at(y, x) != 0.0) continue;
      if (side == LesionSide::left ? x >= g.cx : x <= g.cx) continue;
      if (std::abs(counterfactual.at(y, x) - params.intensity_ventricle) <= band) ++measured;
    }
  }
  return std::abs(static_cast<double>(measured) - static_cast<double>(expected));
}

}  // namespace cfdiff
