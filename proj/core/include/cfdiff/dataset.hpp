#pragma once

#include <filesystem>
#include <vector>

#include "cfdiff/phantom.hpp"

namespace cfdiff {

// On-disk layout: <dir>/{train,test,healthy}/sample_NNNN.pgm plus a sidecar
// sample_NNNN.txt carrying the masks (RLE), lesion side and areas. Images
// round-trip through 8-bit PGM; masks round-trip exactly.
struct Dataset {
  std::vector<PhantomSample> train;    // lesioned training split
  std::vector<PhantomSample> test;     // lesioned evaluation split
  std::vector<PhantomSample> healthy;  // lesion-free priors for pairing
};

void save_sample(const std::filesystem::path& dir, int index, const PhantomSample& sample);
PhantomSample load_sample(const std::filesystem::path& dir, int index, int size);

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir, const PhantomParams& params);

}  // namespace cfdiff
