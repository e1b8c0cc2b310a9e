#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "cfdiff/config.hpp"
#include "cfdiff/dataset.hpp"
#include "cfdiff/manifest.hpp"

namespace cfdiff {

// Worker cap: CFD_THREADS when set (>= 1), else hardware concurrency.
int worker_count();

// Static strided scheduling: worker w runs i = w, w + W, ... Results must go
// into preallocated per-index slots, which makes parallel and serial runs
// bit-identical. First thrown exception is rethrown on the caller's thread.
void parallel_for(int n, const std::function<void(int)>& body);

// Writes train/test/healthy splits (PGM + sidecars), a stratification report
// and a run manifest into out_dir. Seeded by config.seeds[0].
RunManifest cmd_generate_dataset(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir);

struct TrainOutput {
  RunManifest manifest;
  std::vector<double> epoch_losses;
  std::filesystem::path weights_path;
};

// Trains the tiny denoiser (mask-conditioned, or the Palette variant when
// train.model = palette) on the train split of config.dataset_dir; persists
// weights.cfd and loss_curve.csv.
TrainOutput cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct MethodAggregate {
  EditMethod method = EditMethod::mededit;
  int samples = 0;
  double frechet = 0.0;  // mean over seeds of the per-seed set distance
  double dice_mean = 0.0;
  double indirect_error_mean = 0.0;
  double mae_healthy_mean = 0.0;
  double combined = 0.0;  // (1 - dice_mean) * frechet
};

struct EvaluationReport {
  RunManifest manifest;
  std::vector<MethodAggregate> aggregates;
};

// Pairs each test pathology mask with a healthy prior (without replacement,
// seeded), runs every configured method, and writes metrics.csv,
// aggregate.csv, galleries and the manifest.
EvaluationReport cmd_evaluate(const ExperimentConfig& config,
                              const std::filesystem::path& out_dir);

struct SweepPoint {
  double value = 0.0;
  std::vector<MethodAggregate> aggregates;
};

struct SweepReport {
  RunManifest manifest;
  std::vector<SweepPoint> points;
};

// Re-runs the evaluation over sweep.values on sweep.axis (k -> mededit and
// palette kernels, U -> mededit resamples, encoding_ratio -> sdedit), all
// else fixed; emits sweep.csv.
SweepReport cmd_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace cfdiff
