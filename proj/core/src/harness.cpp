#include "cfdiff/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/editing.hpp"
#include "cfdiff/errors.hpp"
#include "cfdiff/metrics.hpp"
#include "cfdiff/morphology.hpp"
#include "cfdiff/pgm.hpp"
#include "cfdiff/version.hpp"

namespace cfdiff {

namespace fs = std::filesystem;

int worker_count() {
  if (const char* env = std::getenv("CFD_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

std::string fmt_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw IoError("short write to " + path.string());
  }
}

RunManifest start_manifest(const ExperimentConfig& config, const char* command) {
  RunManifest m;
  m.artifact_version = kArtifactVersion;
  m.command = command;
  m.config_hash = config.config_hash();
  m.seeds = config.seeds;
  return m;
}

// Stream tags for deriving independent rngs from a master seed.
constexpr uint64_t kStreamTrain = 0x0100000000ULL;
constexpr uint64_t kStreamTest = 0x0200000000ULL;
constexpr uint64_t kStreamHealthy = 0x0300000000ULL;
constexpr uint64_t kStreamPairing = 0x70616972ULL;  // "pair"
constexpr uint64_t kStreamFit = 0x666974ULL;        // "fit"

}  // namespace

RunManifest cmd_generate_dataset(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  config.validate();
  ensure_dir(out_dir);
  RunManifest manifest = start_manifest(config, "generate-dataset");
  const uint64_t seed = config.seeds.front();
  const SeededRng master(seed);

  Dataset dataset;
  dataset.train.reserve(config.train_count);
  for (int i = 0; i < config.train_count; ++i) {
    SeededRng rng = master.derive(kStreamTrain + i);
    dataset.train.push_back(generate(config.phantom, true, rng));
  }
  dataset.test.reserve(config.test_count);
  for (int i = 0; i < config.test_count; ++i) {
    SeededRng rng = master.derive(kStreamTest + i);
    dataset.test.push_back(generate(config.phantom, true, rng));
  }
  dataset.healthy.reserve(config.healthy_count);
  for (int i = 0; i < config.healthy_count; ++i) {
    SeededRng rng = master.derive(kStreamHealthy + i);
    dataset.healthy.push_back(generate(config.phantom, false, rng));
  }
  save_dataset(out_dir, dataset);

  // Stratification over the full lesioned set (train then test).
  std::vector<int> areas;
  for (const PhantomSample& s : dataset.train) areas.push_back(s.lesion_area);
  for (const PhantomSample& s : dataset.test) areas.push_back(s.lesion_area);
  std::string report;
  if (!areas.empty()) {
    const Stratification strat = stratify(areas);
    report += "lesioned_samples = " + std::to_string(areas.size()) + "\n";
    report += "small_count = " + std::to_string(strat.small.size()) + "\n";
    report += "medium_count = " + std::to_string(strat.medium.size()) + "\n";
    report += "large_count = " + std::to_string(strat.large.size()) + "\n";
    report += "small_threshold = " + std::to_string(strat.small_threshold) + "\n";
    report += "large_threshold = " + std::to_string(strat.large_threshold) + "\n";
  } else {
    report = "lesioned_samples = 0\n";
  }
  write_text_file(out_dir / "stratification.txt", report);
  write_text_file(out_dir / "config.txt", config.canonical_text());

  for (const char* split : {"train", "test", "healthy"}) {
    const fs::path dir = out_dir / split;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const fs::path& p : paths) record_file(manifest, out_dir, p);
  }
  record_file(manifest, out_dir, out_dir / "stratification.txt");
  record_file(manifest, out_dir, out_dir / "config.txt");

  manifest.wall_time_seconds = seconds_since(start);
  manifest.save(out_dir / "manifest.json");
  return manifest;
}

namespace {

std::vector<TrainingSample> make_training_samples(const ExperimentConfig& config,
                                                  const std::vector<PhantomSample>& split,
                                                  bool palette_variant) {
  std::vector<TrainingSample> out;
  out.reserve(split.size());
  for (const PhantomSample& s : split) {
    TrainingSample ts;
    ts.x0 = s.image;
    ts.brain = s.brain;
    ts.pathology = s.pathology;
    if (palette_variant) {
      Image m = dilate(s.pathology, config.palette_kernel, config.dilate_element);
      Image known = s.image;
      for (size_t i = 0; i < known.pixels.size(); ++i) {
        if (m.pixels[i] != 0.0) known.pixels[i] = 0.0;
      }
      ts.extra.push_back(std::move(known));
      ts.extra.push_back(std::move(m));
    }
    out.push_back(std::move(ts));
  }
  return out;
}

}  // namespace

TrainOutput cmd_train(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  config.validate();
  if (config.dataset_dir.empty()) {
    throw ConfigError("train needs dataset.dir in the config");
  }
  ensure_dir(out_dir);
  const Dataset dataset = load_dataset(config.dataset_dir, config.phantom);
  if (dataset.train.empty()) {
    throw ConfigError("dataset at " + config.dataset_dir + " has no train split samples");
  }

  const bool palette = config.train_palette_variant;
  const std::vector<TrainingSample> samples =
      make_training_samples(config, dataset.train, palette);
  const NoiseSchedule schedule = config.make_schedule();

  SeededRng rng = SeededRng(config.seeds.front()).derive(kStreamFit);
  TinyDenoiserWeights weights =
      TinyDenoiserWeights::init(palette ? 5 : 3, config.train_hidden_channels,
                                config.train_temb_dim, config.schedule_steps, rng);
  OptimizerConfig opt;
  opt.learning_rate = config.train_learning_rate;
  opt.momentum = config.train_momentum;
  opt.batch_size = config.train_batch_size;
  opt.epochs = config.train_epochs;
  TrainResult result = train(std::move(weights), samples, schedule, opt, rng);

  TrainOutput out;
  out.weights_path = out_dir / (palette ? "palette_weights.cfd" : "weights.cfd");
  save_weights(result.weights, out.weights_path.string());
  out.epoch_losses = result.epoch_losses;

  std::string curve = "epoch,loss\n";
  for (size_t i = 0; i < result.epoch_losses.size(); ++i) {
    curve += std::to_string(i + 1) + "," + fmt_metric(result.epoch_losses[i]) + "\n";
  }
  const fs::path curve_path = out_dir / (palette ? "palette_loss_curve.csv" : "loss_curve.csv");
  write_text_file(curve_path, curve);
  write_text_file(out_dir / "config.txt", config.canonical_text());

  out.manifest = start_manifest(config, "train");
  record_file(out.manifest, out_dir, out.weights_path);
  record_file(out.manifest, out_dir, curve_path);
  record_file(out.manifest, out_dir, out_dir / "config.txt");
  out.manifest.wall_time_seconds = seconds_since(start);
  out.manifest.save(out_dir / "manifest.json");
  return out;
}

namespace {

// Per-(seed, method, triplet) result slot.
struct EditOutcome {
  Image counterfactual;
  double dice = 0.0;
  double indirect_error = 0.0;
  double mae_healthy = 0.0;
};

struct EvalCore {
  std::vector<MetricRow> rows;               // seed-major, then method, then triplet
  std::vector<MethodAggregate> aggregates;   // one per configured method
  // counterfactuals of the first seed, for galleries: [method][triplet]
  std::vector<std::vector<Image>> first_seed_images;
  std::vector<int> first_seed_priors;        // healthy index per triplet
};

std::unique_ptr<Denoiser> make_task_denoiser(const ExperimentConfig& config,
                                             const NoiseSchedule& schedule,
                                             const DenoiserSpec& spec,
                                             const TinyDenoiserWeights* loaded) {
  if (spec.kind == DenoiserKind::analytic) {
    return std::make_unique<AnalyticDenoiser>(config.phantom, schedule);
  }
  return std::make_unique<TinyDenoiser>(*loaded);
}

EvalCore evaluate_core(const ExperimentConfig& config, const Dataset& dataset,
                       const NoiseSchedule& schedule) {
  if (static_cast<int>(dataset.test.size()) < config.eval_triplets) {
    throw ConfigError("dataset has " + std::to_string(dataset.test.size()) +
                      " test samples, eval.triplets = " + std::to_string(config.eval_triplets));
  }
  if (static_cast<int>(dataset.healthy.size()) < config.eval_triplets) {
    throw ConfigError("dataset has " + std::to_string(dataset.healthy.size()) +
                      " healthy samples, eval.triplets = " +
                      std::to_string(config.eval_triplets));
  }

  // Weight files are loaded once and shared; TinyDenoiser::predict is pure.
  std::unique_ptr<TinyDenoiserWeights> mask_weights;
  std::unique_ptr<TinyDenoiserWeights> palette_weights;
  const bool wants_palette = std::find(config.methods.begin(), config.methods.end(),
                                       EditMethod::palette) != config.methods.end();
  if (config.denoiser.kind == DenoiserKind::trained) {
    mask_weights =
        std::make_unique<TinyDenoiserWeights>(load_weights(config.denoiser.weights_path));
    expect_channels(*mask_weights, 3);
  }
  if (wants_palette && config.palette_denoiser.kind == DenoiserKind::trained) {
    palette_weights = std::make_unique<TinyDenoiserWeights>(
        load_weights(config.palette_denoiser.weights_path));
    expect_channels(*palette_weights, 5);
  }

  // Realism reference: the lesioned test distribution.
  std::vector<Image> real_images;
  real_images.reserve(dataset.test.size());
  for (const PhantomSample& s : dataset.test) real_images.push_back(s.image);
  const FeatureSet real_features =
      extract_features(real_images, config.projection_seed, config.feature_dim);

  // Healthy-region base: brain minus both ventricle exclusion disks. The
  // per-triplet region further removes dilate(p, mededit.kernel) so every
  // method is scored on the same untouched-tissue area.
  const PhantomGeometry geom = phantom_geometry(config.phantom);
  Image healthy_base = render_brain_mask(config.phantom);
  for (int y = 0; y < healthy_base.height; ++y) {
    for (int x = 0; x < healthy_base.width; ++x) {
      const bool near_left =
          std::hypot(x - geom.vent_left_x, y - geom.vent_y) <= geom.exclusion_radius;
      const bool near_right =
          std::hypot(x - geom.vent_right_x, y - geom.vent_y) <= geom.exclusion_radius;
      if (near_left || near_right) healthy_base.at(y, x) = 0.0;
    }
  }

  const int n_seeds = static_cast<int>(config.seeds.size());
  const int n_methods = static_cast<int>(config.methods.size());
  const int n_triplets = config.eval_triplets;

  // Pairing permutations per seed (without replacement).
  std::vector<std::vector<int>> pairing(n_seeds);
  for (int si = 0; si < n_seeds; ++si) {
    std::vector<int>& perm = pairing[si];
    perm.resize(dataset.healthy.size());
    std::iota(perm.begin(), perm.end(), 0);
    SeededRng rng = SeededRng(config.seeds[si]).derive(kStreamPairing);
    for (size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.next_index(i)]);
    }
  }

  const int total = n_seeds * n_methods * n_triplets;
  std::vector<EditOutcome> outcomes(total);
  parallel_for(total, [&](int index) {
    const int ti = index % n_triplets;
    const int mi = (index / n_triplets) % n_methods;
    const int si = index / (n_triplets * n_methods);
    const uint64_t seed = config.seeds[si];
    const EditMethod method = config.methods[mi];

    const PhantomSample& test_sample = dataset.test[ti];
    const PhantomSample& prior = dataset.healthy[pairing[si][ti]];

    const EditConfig edit_cfg = config.edit_config(method);
    const DenoiserSpec& spec =
        method == EditMethod::palette ? config.palette_denoiser : config.denoiser;
    const TinyDenoiserWeights* loaded =
        method == EditMethod::palette ? palette_weights.get() : mask_weights.get();
    const std::unique_ptr<Denoiser> denoiser =
        make_task_denoiser(config, schedule, spec, loaded);

    // The edit stream depends on (seed, triplet) only, so methods that share
    // the same compute path (mededit k=1 vs naive repaint, same U) coincide
    // bit-exactly.
    SeededRng rng = SeededRng(seed).derive(static_cast<uint64_t>(ti));
    EditResult result = run_edit(edit_cfg, prior.image, prior.brain, test_sample.pathology,
                                 *denoiser, schedule, rng);

    EditOutcome& out = outcomes[index];
    out.dice = dice(segment_lesion(result.counterfactual, config.phantom),
                    test_sample.pathology);
    out.indirect_error = indirect_effect_error(result.counterfactual, prior.brain,
                                               test_sample.pathology, config.phantom);
    Image healthy_region = healthy_base;
    const Image grown = dilate(test_sample.pathology, config.mededit_kernel, config.dilate_element);
    for (size_t i = 0; i < healthy_region.pixels.size(); ++i) {
      if (grown.pixels[i] != 0.0) healthy_region.pixels[i] = 0.0;
    }
    out.mae_healthy = mean_abs_diff_in(result.counterfactual, prior.image, healthy_region);
    out.counterfactual = std::move(result.counterfactual);
  });

  EvalCore core;
  core.rows.reserve(total);
  std::vector<double> frechet_by_seed_method(static_cast<size_t>(n_seeds) * n_methods, 0.0);
  for (int si = 0; si < n_seeds; ++si) {
    for (int mi = 0; mi < n_methods; ++mi) {
      std::vector<Image> cf_images;
      cf_images.reserve(n_triplets);
      for (int ti = 0; ti < n_triplets; ++ti) {
        cf_images.push_back(outcomes[(si * n_methods + mi) * n_triplets + ti].counterfactual);
      }
      const FeatureSet cf_features =
          extract_features(cf_images, config.projection_seed, config.feature_dim);
      frechet_by_seed_method[static_cast<size_t>(si) * n_methods + mi] =
          frechet_distance(cf_features, real_features);
    }
  }

  for (int si = 0; si < n_seeds; ++si) {
    for (int mi = 0; mi < n_methods; ++mi) {
      const EditConfig edit_cfg = config.edit_config(config.methods[mi]);
      for (int ti = 0; ti < n_triplets; ++ti) {
        const EditOutcome& o = outcomes[(si * n_methods + mi) * n_triplets + ti];
        MetricRow row;
        row.method = to_string(config.methods[mi]);
        row.seed = config.seeds[si];
        switch (config.methods[mi]) {
          case EditMethod::mededit:
            row.kernel = edit_cfg.kernel;
            row.resamples = edit_cfg.resamples;
            break;
          case EditMethod::naive_repaint:
            row.kernel = 1;
            row.resamples = edit_cfg.resamples;
            break;
          case EditMethod::sdedit:
            break;  // no kernel, no resampling loop
          case EditMethod::palette:
            row.kernel = edit_cfg.kernel;
            break;
        }
        row.dice = o.dice;
        row.frechet = frechet_by_seed_method[static_cast<size_t>(si) * n_methods + mi];
        row.indirect_error = o.indirect_error;
        row.mae_healthy = o.mae_healthy;
        core.rows.push_back(std::move(row));
      }
    }
  }

  for (int mi = 0; mi < n_methods; ++mi) {
    MethodAggregate agg;
    agg.method = config.methods[mi];
    double frechet_sum = 0.0;
    for (int si = 0; si < n_seeds; ++si) {
      frechet_sum += frechet_by_seed_method[static_cast<size_t>(si) * n_methods + mi];
      for (int ti = 0; ti < n_triplets; ++ti) {
        const EditOutcome& o = outcomes[(si * n_methods + mi) * n_triplets + ti];
        agg.dice_mean += o.dice;
        agg.indirect_error_mean += o.indirect_error;
        agg.mae_healthy_mean += o.mae_healthy;
        ++agg.samples;
      }
    }
    agg.frechet = frechet_sum / n_seeds;
    agg.dice_mean /= agg.samples;
    agg.indirect_error_mean /= agg.samples;
    agg.mae_healthy_mean /= agg.samples;
    agg.combined = (1.0 - agg.dice_mean) * agg.frechet;
    core.aggregates.push_back(agg);
  }

  core.first_seed_images.resize(n_methods);
  for (int mi = 0; mi < n_methods; ++mi) {
    for (int ti = 0; ti < n_triplets; ++ti) {
      core.first_seed_images[mi].push_back(
          std::move(outcomes[(0 * n_methods + mi) * n_triplets + ti].counterfactual));
    }
  }
  if (n_seeds > 0) {
    core.first_seed_priors.assign(pairing[0].begin(), pairing[0].begin() + n_triplets);
  }

  // Every emitted value must be finite.
  for (const MetricRow& row : core.rows) {
    if (!std::isfinite(row.dice) || !std::isfinite(row.frechet) ||
        !std::isfinite(row.indirect_error) || !std::isfinite(row.mae_healthy)) {
      throw std::runtime_error("evaluation produced a non-finite metric for " + row.method);
    }
  }
  return core;
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string csv = "method,seed,k,U,dice,frechet,indirect_error\n";
  for (const MetricRow& row : rows) {
    csv += row.method + "," + std::to_string(row.seed) + "," + std::to_string(row.kernel) + "," +
           std::to_string(row.resamples) + "," + fmt_metric(row.dice) + "," +
           fmt_metric(row.frechet) + "," + fmt_metric(row.indirect_error) + "\n";
  }
  return csv;
}

std::string aggregate_csv(const std::vector<MethodAggregate>& aggregates) {
  std::string csv =
      "method,n,frechet,dice_mean,one_minus_dice_times_frechet,indirect_error_mean,"
      "mae_healthy_mean\n";
  for (const MethodAggregate& a : aggregates) {
    csv += to_string(a.method) + "," + std::to_string(a.samples) + "," + fmt_metric(a.frechet) +
           "," + fmt_metric(a.dice_mean) + "," + fmt_metric(a.combined) + "," +
           fmt_metric(a.indirect_error_mean) + "," + fmt_metric(a.mae_healthy_mean) + "\n";
  }
  return csv;
}

// prior | counterfactual | positive difference | negative difference
Image gallery_strip(const Image& prior, const Image& counterfactual) {
  const int h = prior.height, w = prior.width;
  Image strip(h, 4 * w + 3);
  for (int y = 0; y < h; ++y) {
    strip.at(y, w) = strip.at(y, 2 * w + 1) = strip.at(y, 3 * w + 2) = 1.0;  // separators
    for (int x = 0; x < w; ++x) {
      const double a = prior.at(y, x);
      const double b = std::clamp(counterfactual.at(y, x), 0.0, 1.0);
      strip.at(y, x) = a;
      strip.at(y, w + 1 + x) = b;
      strip.at(y, 2 * w + 2 + x) = std::max(b - a, 0.0);
      strip.at(y, 3 * w + 3 + x) = std::max(a - b, 0.0);
    }
  }
  return strip;
}

}  // namespace

EvaluationReport cmd_evaluate(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  config.validate();
  if (config.dataset_dir.empty()) {
    throw ConfigError("evaluate needs dataset.dir in the config");
  }
  ensure_dir(out_dir);
  const Dataset dataset = load_dataset(config.dataset_dir, config.phantom);
  const NoiseSchedule schedule = config.make_schedule();

  EvalCore core = evaluate_core(config, dataset, schedule);

  EvaluationReport report;
  report.manifest = start_manifest(config, "evaluate");
  report.manifest.pairing = "seeded permutation, without replacement";
  report.manifest.metrics = core.rows;
  report.aggregates = core.aggregates;

  write_text_file(out_dir / "metrics.csv", metrics_csv(core.rows));
  write_text_file(out_dir / "aggregate.csv", aggregate_csv(core.aggregates));
  write_text_file(out_dir / "config.txt", config.canonical_text());
  record_file(report.manifest, out_dir, out_dir / "metrics.csv");
  record_file(report.manifest, out_dir, out_dir / "aggregate.csv");
  record_file(report.manifest, out_dir, out_dir / "config.txt");

  if (config.gallery_count > 0 && !config.methods.empty()) {
    const fs::path gallery_dir = out_dir / "gallery";
    ensure_dir(gallery_dir);
    const int n_show = std::min(config.gallery_count, config.eval_triplets);
    for (size_t mi = 0; mi < config.methods.size(); ++mi) {
      for (int ti = 0; ti < n_show; ++ti) {
        const Image& prior = dataset.healthy[core.first_seed_priors[ti]].image;
        const Image strip = gallery_strip(prior, core.first_seed_images[mi][ti]);
        char name[64];
        std::snprintf(name, sizeof(name), "%s_triplet%03d.pgm",
                      to_string(config.methods[mi]).c_str(), ti);
        const fs::path path = gallery_dir / name;
        write_pgm(path, strip);
        record_file(report.manifest, out_dir, path);
      }
    }
  }

  report.manifest.wall_time_seconds = seconds_since(start);
  report.manifest.save(out_dir / "manifest.json");
  return report;
}

SweepReport cmd_sweep(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = Clock::now();
  config.validate();
  if (config.dataset_dir.empty()) {
    throw ConfigError("sweep needs dataset.dir in the config");
  }
  ensure_dir(out_dir);
  const Dataset dataset = load_dataset(config.dataset_dir, config.phantom);

  SweepReport report;
  report.manifest = start_manifest(config, "sweep");
  report.manifest.pairing = "seeded permutation, without replacement";

  std::string csv =
      "axis,value,method,n,frechet,dice_mean,indirect_error_mean,mae_healthy_mean\n";
  for (double value : config.sweep_values) {
    ExperimentConfig point = config;
    switch (config.sweep_axis) {
      case SweepAxis::kernel:
        point.mededit_kernel = static_cast<int>(value);
        point.palette_kernel = static_cast<int>(value);
        break;
      case SweepAxis::resamples:
        point.mededit_resamples = static_cast<int>(value);
        break;
      case SweepAxis::encoding_ratio:
        point.sdedit_encoding_ratio = value;
        break;
    }
    point.validate();
    const NoiseSchedule schedule = point.make_schedule();
    EvalCore core = evaluate_core(point, dataset, schedule);

    SweepPoint sp;
    sp.value = value;
    sp.aggregates = core.aggregates;
    for (const MethodAggregate& a : core.aggregates) {
      csv += to_string(config.sweep_axis) + "," + fmt_metric(value) + "," + to_string(a.method) +
             "," + std::to_string(a.samples) + "," + fmt_metric(a.frechet) + "," +
             fmt_metric(a.dice_mean) + "," + fmt_metric(a.indirect_error_mean) + "," +
             fmt_metric(a.mae_healthy_mean) + "\n";
    }
    // The sweep manifest keeps per-point rows too, tagged by the axis value
    // through the kernel/resamples columns they override.
    for (MetricRow& row : core.rows) report.manifest.metrics.push_back(std::move(row));
    report.points.push_back(std::move(sp));
  }

  write_text_file(out_dir / "sweep.csv", csv);
  write_text_file(out_dir / "config.txt", config.canonical_text());
  record_file(report.manifest, out_dir, out_dir / "sweep.csv");
  record_file(report.manifest, out_dir, out_dir / "config.txt");
  report.manifest.wall_time_seconds = seconds_since(start);
  report.manifest.save(out_dir / "manifest.json");
  return report;
}

}  // namespace cfdiff
