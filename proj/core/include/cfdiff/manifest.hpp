#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfdiff {

// One per-sample metric record; mirrors the metrics.csv row layout.
struct MetricRow {
  std::string method;
  uint64_t seed = 0;
  int kernel = 0;     // 0 when the method has no kernel (sdedit)
  int resamples = 0;  // 0 when the method has no resampling loop
  double dice = 0.0;
  double frechet = 0.0;  // method-level value, repeated per row
  double indirect_error = 0.0;
  double mae_healthy = 0.0;  // aggregate-table extra, not in metrics.csv
};

struct FileEntry {
  std::string path;  // relative to the run directory
  uint64_t hash = 0;
  uint64_t bytes = 0;
};

// Everything needed to audit or re-run a command. Wall time is recorded but
// excluded from content_hash(), so two equal runs hash equal regardless of
// machine speed.
struct RunManifest {
  std::string artifact_version;
  std::string command;
  uint64_t config_hash = 0;
  std::vector<uint64_t> seeds;
  std::string pairing;  // evaluate/sweep: the triplet pairing policy
  std::vector<MetricRow> metrics;
  std::vector<FileEntry> files;
  double wall_time_seconds = 0.0;

  uint64_t content_hash() const;
  std::string to_json() const;
  void save(const std::filesystem::path& path) const;
};

uint64_t fnv1a_file(const std::filesystem::path& path);
uint64_t fnv1a_bytes(const void* data, size_t size, uint64_t h = 1469598103934665603ULL);

// Hashes the file and appends it to manifest.files (path stored relative to root).
void record_file(RunManifest& manifest, const std::filesystem::path& root,
                 const std::filesystem::path& path);

}  // namespace cfdiff
