#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfdiff/editing.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/phantom.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

enum class DenoiserKind { analytic, trained };

struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::analytic;
  std::string weights_path;  // set when kind == trained
};

enum class SweepAxis { kernel, resamples, encoding_ratio };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

// Flat key=value experiment configuration. Presets "desk-200" and
// "paper-1000" expand first; explicit keys override preset values. Unknown
// or duplicate keys are rejected, and everything is validated before any
// compute starts.
struct ExperimentConfig {
  // schedule.*
  int schedule_steps = 200;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  SigmaMode sigma_mode = SigmaMode::ddpm;

  PhantomParams phantom;  // phantom.*

  // dataset.*
  int train_count = 400;
  int test_count = 50;
  int healthy_count = 60;
  std::string dataset_dir;  // input for train/evaluate/sweep

  DenoiserSpec denoiser;          // denoiser = analytic | trained:<path>
  DenoiserSpec palette_denoiser;  // palette_denoiser = analytic | trained:<path>

  std::vector<EditMethod> methods = {EditMethod::mededit, EditMethod::naive_repaint,
                                     EditMethod::sdedit, EditMethod::palette};
  int mededit_kernel = 7;
  int mededit_resamples = 4;
  int naive_resamples = 3;
  double sdedit_encoding_ratio = 0.2;
  int palette_kernel = 1;
  StructuringElement dilate_element = StructuringElement::square;  // morphology.element

  // eval.*
  int eval_triplets = 50;
  int gallery_count = 8;
  int feature_dim = 64;
  uint64_t projection_seed = 2024;

  std::vector<uint64_t> seeds = {1};

  // train.*
  double train_learning_rate = 1e-3;
  double train_momentum = 0.9;
  int train_batch_size = 16;
  int train_epochs = 200;
  int train_hidden_channels = 8;
  int train_temb_dim = 16;
  bool train_palette_variant = false;  // train.model = mask | palette

  // sweep.*
  SweepAxis sweep_axis = SweepAxis::kernel;
  std::vector<double> sweep_values = {1, 3, 7, 11};

  void validate() const;
  NoiseSchedule make_schedule() const;

  // Per-method EditConfig as the harness runs it.
  EditConfig edit_config(EditMethod method) const;

  // Canonical serialization: every key, sorted, one per line. Two configs
  // that behave identically serialize identically.
  std::string canonical_text() const;
  uint64_t config_hash() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void apply_preset(ExperimentConfig& config, const std::string& preset);

}  // namespace cfdiff
