#pragma once

#include <filesystem>
#include <string>

#include "cfdiff/image.hpp"

namespace cfdiff {

// 8-bit binary PGM (P5). Export rounds clamp(v, 0, 1) * 255 to the nearest
// integer; import maps byte b back to b / 255.0. Masks are written {0, 255}.
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);

void write_mask_pgm(const std::filesystem::path& path, const Image& mask);
Image read_mask_pgm(const std::filesystem::path& path);

// Row-major run-length encoding of a binary mask: "start:length" pairs
// separated by spaces, empty mask encodes to "".
std::string mask_to_rle(const Image& mask);
Image mask_from_rle(const std::string& rle, int height, int width);

}  // namespace cfdiff
