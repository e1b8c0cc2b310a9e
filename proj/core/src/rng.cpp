#include "cfdiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace cfdiff {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t finalize(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t SeededRng::next_u64() {
  counter_ += 1;
  return finalize(seed_ + counter_ * kGolden);
}

double SeededRng::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_normal() {
  // 1 - uniform keeps u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SeededRng::fill_normal(Image& img) {
  for (double& v : img.pixels) v = next_normal();
}

Image SeededRng::normal_image(int height, int width) {
  Image img(height, width);
  fill_normal(img);
  return img;
}

uint64_t SeededRng::next_index(uint64_t n) {
  return next_u64() % n;
}

SeededRng SeededRng::derive(uint64_t stream_index) const {
  return SeededRng(finalize(finalize(seed_ ^ 0xd1b54a32d192ed03ULL) + stream_index * kGolden));
}

}  // namespace cfdiff
