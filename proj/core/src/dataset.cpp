#include "cfdiff/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cfdiff/errors.hpp"
#include "cfdiff/pgm.hpp"

namespace cfdiff {

namespace {

std::string sample_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%04d", index);
  return buf;
}

std::string side_name(LesionSide side) {
  switch (side) {
    case LesionSide::none: return "none";
    case LesionSide::left: return "left";
    case LesionSide::right: return "right";
  }
  return "none";
}

LesionSide side_from_name(const std::string& name) {
  if (name == "none") return LesionSide::none;
  if (name == "left") return LesionSide::left;
  if (name == "right") return LesionSide::right;
  throw IoError("unknown lesion side '" + name + "'");
}

}  // namespace

void save_sample(const std::filesystem::path& dir, int index, const PhantomSample& sample) {
  const std::string stem = sample_stem(index);
  write_pgm(dir / (stem + ".pgm"), sample.image);

  std::ofstream out(dir / (stem + ".txt"));
  if (!out) {
    throw IoError("cannot write sidecar for " + (dir / stem).string());
  }
  out << "side = " << side_name(sample.side) << "\n";
  out << "lesion_area = " << sample.lesion_area << "\n";
  out << "true_ipsi_ventricle_area = " << sample.true_ipsi_ventricle_area << "\n";
  out << "brain_rle = " << mask_to_rle(sample.brain) << "\n";
  out << "pathology_rle = " << mask_to_rle(sample.pathology) << "\n";
  out << "ventricles_rle = " << mask_to_rle(sample.ventricles) << "\n";
  if (!out) {
    throw IoError("short write to sidecar for " + (dir / stem).string());
  }
}

PhantomSample load_sample(const std::filesystem::path& dir, int index, int size) {
  const std::string stem = sample_stem(index);
  PhantomSample s;
  s.image = read_pgm(dir / (stem + ".pgm"));
  if (s.image.height != size || s.image.width != size) {
    throw IoError((dir / stem).string() + ": image size does not match the configuration");
  }

  std::ifstream in(dir / (stem + ".txt"));
  if (!in) {
    throw IoError("missing sidecar for " + (dir / stem).string());
  }
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto trim = [](std::string v) {
      const size_t a = v.find_first_not_of(" \t\r");
      const size_t b = v.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"side", "lesion_area", "true_ipsi_ventricle_area", "brain_rle",
                          "pathology_rle", "ventricles_rle"}) {
    if (!kv.contains(key)) {
      throw IoError((dir / stem).string() + ": sidecar misses key '" + key + "'");
    }
  }
  s.side = side_from_name(kv["side"]);
  s.lesion_area = std::stoi(kv["lesion_area"]);
  s.true_ipsi_ventricle_area = std::stoi(kv["true_ipsi_ventricle_area"]);
  s.brain = mask_from_rle(kv["brain_rle"], size, size);
  s.pathology = mask_from_rle(kv["pathology_rle"], size, size);
  s.ventricles = mask_from_rle(kv["ventricles_rle"], size, size);
  return s;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  const struct {
    const char* name;
    const std::vector<PhantomSample>* samples;
  } splits[] = {{"train", &dataset.train}, {"test", &dataset.test}, {"healthy", &dataset.healthy}};
  for (const auto& split : splits) {
    const fs::path split_dir = dir / split.name;
    std::error_code ec;
    fs::create_directories(split_dir, ec);
    if (ec) {
      throw IoError("cannot create " + split_dir.string() + ": " + ec.message());
    }
    for (size_t i = 0; i < split.samples->size(); ++i) {
      save_sample(split_dir, static_cast<int>(i), (*split.samples)[i]);
    }
  }
}

Dataset load_dataset(const std::filesystem::path& dir, const PhantomParams& params) {
  namespace fs = std::filesystem;
  Dataset out;
  const struct {
    const char* name;
    std::vector<PhantomSample>* samples;
  } splits[] = {{"train", &out.train}, {"test", &out.test}, {"healthy", &out.healthy}};
  for (const auto& split : splits) {
    const fs::path split_dir = dir / split.name;
    if (!fs::exists(split_dir)) {
      throw IoError("dataset split directory missing: " + split_dir.string());
    }
    for (int i = 0;; ++i) {
      if (!fs::exists(split_dir / (sample_stem(i) + ".pgm"))) break;
      split.samples->push_back(load_sample(split_dir, i, params.size));
    }
  }
  return out;
}

}  // namespace cfdiff
