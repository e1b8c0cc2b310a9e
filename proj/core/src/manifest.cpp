#include "cfdiff/manifest.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cfdiff/errors.hpp"

namespace cfdiff {

namespace {

std::string fmt_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

uint64_t fnv1a_bytes(const void* data, size_t size, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot hash " + path.string());
  }
  uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a_bytes(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

void record_file(RunManifest& manifest, const std::filesystem::path& root,
                 const std::filesystem::path& path) {
  FileEntry entry;
  entry.path = std::filesystem::relative(path, root).generic_string();
  entry.hash = fnv1a_file(path);
  entry.bytes = static_cast<uint64_t>(std::filesystem::file_size(path));
  manifest.files.push_back(std::move(entry));
}

uint64_t RunManifest::content_hash() const {
  // Deterministic payload only: wall time stays out.
  std::string payload = artifact_version + "\n" + command + "\n" + std::to_string(config_hash);
  payload += "\n" + pairing;
  for (uint64_t s : seeds) payload += "\nseed " + std::to_string(s);
  for (const MetricRow& row : metrics) {
    payload += "\n" + row.method + "," + std::to_string(row.seed) + "," +
               std::to_string(row.kernel) + "," + std::to_string(row.resamples) + "," +
               fmt_metric(row.dice) + "," + fmt_metric(row.frechet) + "," +
               fmt_metric(row.indirect_error) + "," + fmt_metric(row.mae_healthy);
  }
  for (const FileEntry& f : files) {
    payload += "\n" + f.path + " " + std::to_string(f.hash) + " " + std::to_string(f.bytes);
  }
  return fnv1a_bytes(payload.data(), payload.size());
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["artifact_version"] = artifact_version;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  if (!pairing.empty()) j["pairing"] = pairing;
  j["wall_time_seconds"] = wall_time_seconds;
  j["content_hash"] = content_hash();
  j["metrics"] = nlohmann::json::array();
  for (const MetricRow& row : metrics) {
    j["metrics"].push_back({{"method", row.method},
                            {"seed", row.seed},
                            {"k", row.kernel},
                            {"U", row.resamples},
                            {"dice", row.dice},
                            {"frechet", row.frechet},
                            {"indirect_error", row.indirect_error},
                            {"mae_healthy", row.mae_healthy}});
  }
  j["files"] = nlohmann::json::array();
  for (const FileEntry& f : files) {
    j["files"].push_back({{"path", f.path}, {"hash", f.hash}, {"bytes", f.bytes}});
  }
  return j.dump(2) + "\n";
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write manifest " + path.string());
  }
  out << to_json();
  if (!out) {
    throw IoError("short write to manifest " + path.string());
  }
}

}  // namespace cfdiff
