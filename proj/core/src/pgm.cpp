#include "cfdiff/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cfdiff/errors.hpp"

namespace cfdiff {

namespace {

void write_p5(const std::filesystem::path& path, const Image& img,
              unsigned char (*quantize)(double)) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::string bytes(img.pixels.size(), '\0');
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    bytes[i] = static_cast<char>(quantize(img.pixels[i]));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("short write to " + path.string());
  }
}

Image read_p5(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::string magic;
  in >> magic;
  if (magic != "P5") {
    throw IoError(path.string() + " is not a binary PGM (P5) file");
  }
  int width = 0, height = 0, maxval = 0;
  in >> width >> height >> maxval;
  if (!in || width < 1 || height < 1 || maxval != 255) {
    throw IoError(path.string() + " has an unsupported PGM header");
  }
  in.get();  // single whitespace after the header
  Image img(height, width);
  std::string bytes(img.pixels.size(), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path.string() + " is truncated");
  }
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
  }
  return img;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Image& image) {
  write_p5(path, image, [](double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
}

Image read_pgm(const std::filesystem::path& path) { return read_p5(path); }

void write_mask_pgm(const std::filesystem::path& path, const Image& mask) {
  require_binary(mask, "write_mask_pgm");
  write_p5(path, mask,
           [](double v) { return static_cast<unsigned char>(v != 0.0 ? 255 : 0); });
}

Image read_mask_pgm(const std::filesystem::path& path) {
  Image img = read_p5(path);
  for (double& v : img.pixels) v = v != 0.0 ? 1.0 : 0.0;
  return img;
}

std::string mask_to_rle(const Image& mask) {
  require_binary(mask, "mask_to_rle");
  std::string out;
  size_t i = 0;
  while (i < mask.pixels.size()) {
    if (mask.pixels[i] == 0.0) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < mask.pixels.size() && mask.pixels[j] != 0.0) ++j;
    if (!out.empty()) out += " ";
    out += std::to_string(i) + ":" + std::to_string(j - i);
    i = j;
  }
  return out;
}

Image mask_from_rle(const std::string& rle, int height, int width) {
  Image mask(height, width);
  std::stringstream ss(rle);
  std::string run;
  while (ss >> run) {
    const size_t colon = run.find(':');
    if (colon == std::string::npos) {
      throw IoError("malformed RLE run '" + run + "'");
    }
    const size_t start = std::stoull(run.substr(0, colon));
    const size_t len = std::stoull(run.substr(colon + 1));
    if (start + len > mask.pixels.size()) {
      throw IoError("RLE run '" + run + "' exceeds the mask size");
    }
    for (size_t i = start; i < start + len; ++i) mask.pixels[i] = 1.0;
  }
  return mask;
}

}  // namespace cfdiff
