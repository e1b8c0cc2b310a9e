#pragma once

#include <cstdint>

#include "cfdiff/image.hpp"

namespace cfdiff {

// Deterministic counter-based random stream. The exact algorithm is part of
// the artifact's file-format contract: identical seeds must reproduce
// identical Gaussian streams across platforms and releases.
//
//   u64(n)     = splitmix64_finalizer(seed + n * 0x9e3779b97f4a7c15)
//   uniform    = (u64 >> 11) * 2^-53                     in [0, 1)
//   normal     = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)      (Box-Muller, cosine
//                branch only; consumes exactly two u64 draws per normal)
//
// Child streams (derive) hash the parent seed with the stream index through
// the same finalizer twice, so worker streams are independent of how many
// draws the parent has made.
class SeededRng {
 public:
  explicit SeededRng(uint64_t seed) : seed_(seed) {}

  uint64_t next_u64();
  double next_uniform();  // [0, 1), 53-bit resolution
  double next_normal();   // standard normal

  void fill_normal(Image& img);
  Image normal_image(int height, int width);

  // Index in 0..n-1 (n >= 1). Plain modulo; the bias is ~n/2^64.
  uint64_t next_index(uint64_t n);

  // Independent child stream for (seed, stream_index).
  SeededRng derive(uint64_t stream_index) const;

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace cfdiff
