#include "cfdiff/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cfdiff/errors.hpp"

namespace cfdiff {

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kernel: return "k";
    case SweepAxis::resamples: return "U";
    case SweepAxis::encoding_ratio: return "encoding_ratio";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "k") return SweepAxis::kernel;
  if (name == "U") return SweepAxis::resamples;
  if (name == "encoding_ratio") return SweepAxis::encoding_ratio;
  throw ConfigError("unknown sweep axis '" + name + "' (expected k, U or encoding_ratio)");
}

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an unsigned integer");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

DenoiserSpec parse_denoiser_spec(const std::string& key, const std::string& v) {
  DenoiserSpec spec;
  if (v == "analytic") {
    spec.kind = DenoiserKind::analytic;
    return spec;
  }
  if (v.rfind("trained:", 0) == 0) {
    spec.kind = DenoiserKind::trained;
    spec.weights_path = v.substr(8);
    if (spec.weights_path.empty()) {
      throw ConfigError("key '" + key + "': trained denoiser needs a path (trained:<path>)");
    }
    return spec;
  }
  throw ConfigError("key '" + key + "': '" + v + "' is not 'analytic' or 'trained:<path>'");
}

std::string format_denoiser_spec(const DenoiserSpec& spec) {
  return spec.kind == DenoiserKind::analytic ? "analytic" : "trained:" + spec.weights_path;
}

struct KeyHandler {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::map<std::string, KeyHandler>& key_table() {
  static const std::map<std::string, KeyHandler> table = [] {
    std::map<std::string, KeyHandler> t;
    auto add_int = [&t](const char* key, int ExperimentConfig::*field) {
      t[key] = {[field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.*field = parse_int(k, v);
                },
                [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
    };
    auto add_double = [&t](const char* key, double ExperimentConfig::*field) {
      t[key] = {[field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.*field = parse_double(k, v);
                },
                [field](const ExperimentConfig& c) { return fmt_double(c.*field); }};
    };
    auto add_ph_int = [&t](const char* key, int PhantomParams::*field) {
      t[key] = {[field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.phantom.*field = parse_int(k, v);
                },
                [field](const ExperimentConfig& c) { return std::to_string(c.phantom.*field); }};
    };
    auto add_ph_double = [&t](const char* key, double PhantomParams::*field) {
      t[key] = {[field](ExperimentConfig& c, const std::string& k, const std::string& v) {
                  c.phantom.*field = parse_double(k, v);
                },
                [field](const ExperimentConfig& c) { return fmt_double(c.phantom.*field); }};
    };

    add_int("schedule.steps", &ExperimentConfig::schedule_steps);
    add_double("schedule.beta_start", &ExperimentConfig::beta_start);
    add_double("schedule.beta_end", &ExperimentConfig::beta_end);
    t["schedule.sigma_mode"] = {
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "ddpm") {
            c.sigma_mode = SigmaMode::ddpm;
          } else if (v == "ddim") {
            c.sigma_mode = SigmaMode::ddim;
          } else {
            throw ConfigError("key '" + k + "': '" + v + "' is not 'ddpm' or 'ddim'");
          }
        },
        [](const ExperimentConfig& c) {
          return std::string(c.sigma_mode == SigmaMode::ddpm ? "ddpm" : "ddim");
        }};

    add_ph_int("phantom.size", &PhantomParams::size);
    add_ph_double("phantom.brain_rx", &PhantomParams::brain_rx);
    add_ph_double("phantom.brain_ry", &PhantomParams::brain_ry);
    add_ph_double("phantom.ventricle_offset", &PhantomParams::ventricle_offset);
    add_ph_double("phantom.ventricle_radius", &PhantomParams::ventricle_radius);
    add_ph_double("phantom.enlargement_gain", &PhantomParams::enlargement_gain);
    add_ph_double("phantom.intensity_background", &PhantomParams::intensity_background);
    add_ph_double("phantom.intensity_ventricle", &PhantomParams::intensity_ventricle);
    add_ph_double("phantom.intensity_tissue", &PhantomParams::intensity_tissue);
    add_ph_double("phantom.intensity_lesion", &PhantomParams::intensity_lesion);
    add_ph_double("phantom.noise_background", &PhantomParams::noise_background);
    add_ph_double("phantom.noise_ventricle", &PhantomParams::noise_ventricle);
    add_ph_double("phantom.noise_tissue", &PhantomParams::noise_tissue);
    add_ph_double("phantom.noise_lesion", &PhantomParams::noise_lesion);
    add_ph_int("phantom.lesion_area_min", &PhantomParams::lesion_area_min);
    add_ph_int("phantom.lesion_area_max", &PhantomParams::lesion_area_max);
    add_ph_double("phantom.lesion_disk_rmin", &PhantomParams::lesion_disk_rmin);
    add_ph_double("phantom.lesion_disk_rmax", &PhantomParams::lesion_disk_rmax);
    add_ph_int("phantom.max_generation_retries", &PhantomParams::max_generation_retries);

    add_int("dataset.train_count", &ExperimentConfig::train_count);
    add_int("dataset.test_count", &ExperimentConfig::test_count);
    add_int("dataset.healthy_count", &ExperimentConfig::healthy_count);
    t["dataset.dir"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                          c.dataset_dir = v;
                        },
                        [](const ExperimentConfig& c) { return c.dataset_dir; }};

    t["denoiser"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                       c.denoiser = parse_denoiser_spec(k, v);
                     },
                     [](const ExperimentConfig& c) { return format_denoiser_spec(c.denoiser); }};
    t["palette_denoiser"] = {
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.palette_denoiser = parse_denoiser_spec(k, v);
        },
        [](const ExperimentConfig& c) { return format_denoiser_spec(c.palette_denoiser); }};

    t["methods"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                      c.methods.clear();
                      for (const std::string& m : split_list(v)) {
                        c.methods.push_back(edit_method_from_string(m));
                      }
                    },
                    [](const ExperimentConfig& c) {
                      std::string out;
                      for (size_t i = 0; i < c.methods.size(); ++i) {
                        if (i) out += ",";
                        out += to_string(c.methods[i]);
                      }
                      return out;
                    }};

    t["morphology.element"] = {
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          if (v == "square") {
            c.dilate_element = StructuringElement::square;
          } else if (v == "disk") {
            c.dilate_element = StructuringElement::disk;
          } else {
            throw ConfigError("key '" + k + "': '" + v + "' is not 'square' or 'disk'");
          }
        },
        [](const ExperimentConfig& c) {
          return std::string(c.dilate_element == StructuringElement::square ? "square" : "disk");
        }};
    add_int("mededit.kernel", &ExperimentConfig::mededit_kernel);
    add_int("mededit.resamples", &ExperimentConfig::mededit_resamples);
    add_int("naive_repaint.resamples", &ExperimentConfig::naive_resamples);
    add_double("sdedit.encoding_ratio", &ExperimentConfig::sdedit_encoding_ratio);
    add_int("palette.kernel", &ExperimentConfig::palette_kernel);

    add_int("eval.triplets", &ExperimentConfig::eval_triplets);
    add_int("eval.gallery_count", &ExperimentConfig::gallery_count);
    add_int("eval.feature_dim", &ExperimentConfig::feature_dim);
    t["eval.projection_seed"] = {
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {
          c.projection_seed = parse_u64(k, v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.projection_seed); }};

    t["seeds"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                    c.seeds.clear();
                    for (const std::string& s : split_list(v)) c.seeds.push_back(parse_u64(k, s));
                  },
                  [](const ExperimentConfig& c) {
                    std::string out;
                    for (size_t i = 0; i < c.seeds.size(); ++i) {
                      if (i) out += ",";
                      out += std::to_string(c.seeds[i]);
                    }
                    return out;
                  }};

    add_double("train.learning_rate", &ExperimentConfig::train_learning_rate);
    add_double("train.momentum", &ExperimentConfig::train_momentum);
    add_int("train.batch_size", &ExperimentConfig::train_batch_size);
    add_int("train.epochs", &ExperimentConfig::train_epochs);
    add_int("train.hidden_channels", &ExperimentConfig::train_hidden_channels);
    add_int("train.temb_dim", &ExperimentConfig::train_temb_dim);
    t["train.model"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                          if (v == "mask") {
                            c.train_palette_variant = false;
                          } else if (v == "palette") {
                            c.train_palette_variant = true;
                          } else {
                            throw ConfigError("key '" + k + "': '" + v +
                                              "' is not 'mask' or 'palette'");
                          }
                        },
                        [](const ExperimentConfig& c) {
                          return std::string(c.train_palette_variant ? "palette" : "mask");
                        }};

    t["sweep.axis"] = {[](ExperimentConfig& c, const std::string&, const std::string& v) {
                         c.sweep_axis = sweep_axis_from_string(v);
                       },
                       [](const ExperimentConfig& c) { return to_string(c.sweep_axis); }};
    t["sweep.values"] = {[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                           c.sweep_values.clear();
                           for (const std::string& s : split_list(v)) {
                             c.sweep_values.push_back(parse_double(k, s));
                           }
                         },
                         [](const ExperimentConfig& c) {
                           std::string out;
                           for (size_t i = 0; i < c.sweep_values.size(); ++i) {
                             if (i) out += ",";
                             out += fmt_double(c.sweep_values[i]);
                           }
                           return out;
                         }};
    return t;
  }();
  return table;
}

}  // namespace

void apply_preset(ExperimentConfig& config, const std::string& preset) {
  if (preset == "desk-200") {
    config = ExperimentConfig{};  // the struct defaults are the desk preset
    return;
  }
  if (preset == "paper-1000") {
    // Production-scale operating point: 128x128, T = 1000, k = 25. Slow;
    // desk-200 is the working default.
    config = ExperimentConfig{};
    config.schedule_steps = 1000;
    config.phantom.size = 128;
    config.phantom.brain_rx = 48.0;
    config.phantom.brain_ry = 36.0;
    config.phantom.ventricle_offset = 20.0;
    config.phantom.ventricle_radius = 10.0;
    config.phantom.enlargement_gain = 0.75;
    config.phantom.lesion_area_min = 96;
    config.phantom.lesion_area_max = 960;
    config.phantom.lesion_disk_rmin = 6.0;
    config.phantom.lesion_disk_rmax = 14.0;
    config.train_count = 389;
    config.test_count = 54;
    config.healthy_count = 212;
    config.eval_triplets = 54;
    config.mededit_kernel = 25;
    config.train_epochs = 1500;
    return;
  }
  throw ConfigError("unknown preset '" + preset + "' (expected desk-200 or paper-1000)");
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + " is not 'key = value': " +
                        stripped);
    }
    entries.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }

  ExperimentConfig config;
  std::vector<std::string> seen;
  bool preset_seen = false;
  for (const auto& [key, value] : entries) {
    if (key == "preset") {
      if (preset_seen) throw ConfigError("duplicate key 'preset'");
      preset_seen = true;
      apply_preset(config, value);
    }
  }
  for (const auto& [key, value] : entries) {
    if (key == "preset") continue;
    const auto it = key_table().find(key);
    if (it == key_table().end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError("duplicate config key '" + key + "'");
    }
    seen.push_back(key);
    it->second.set(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
  (void)build_schedule(schedule_steps, beta_start, beta_end, sigma_mode);
  phantom.validate();
  for (EditMethod m : methods) edit_config(m).validate();
  if (train_count < 0 || test_count < 0 || healthy_count < 0) {
    throw ConfigError("dataset counts must be >= 0");
  }
  if (eval_triplets < 1) {
    throw ConfigError("eval.triplets must be >= 1");
  }
  if (eval_triplets > test_count) {
    throw ConfigError("eval.triplets = " + std::to_string(eval_triplets) +
                      " exceeds dataset.test_count = " + std::to_string(test_count));
  }
  if (eval_triplets > healthy_count) {
    throw ConfigError("eval.triplets = " + std::to_string(eval_triplets) +
                      " exceeds dataset.healthy_count = " + std::to_string(healthy_count) +
                      " (pairing is without replacement)");
  }
  if (gallery_count < 0) {
    throw ConfigError("eval.gallery_count must be >= 0");
  }
  if (feature_dim < 1) {
    throw ConfigError("eval.feature_dim must be >= 1");
  }
  if (seeds.empty()) {
    throw ConfigError("seeds must list at least one seed");
  }
  if (train_learning_rate < 0.0 || train_momentum < 0.0 || train_momentum >= 1.0) {
    throw ConfigError("train.learning_rate must be >= 0 and train.momentum in [0, 1)");
  }
  if (train_batch_size < 1 || train_epochs < 0) {
    throw ConfigError("train.batch_size must be >= 1 and train.epochs >= 0");
  }
  if (train_hidden_channels < 1 || train_temb_dim < 2 || train_temb_dim % 2 != 0) {
    throw ConfigError("train.hidden_channels must be >= 1 and train.temb_dim even >= 2");
  }
  if (sweep_values.empty()) {
    throw ConfigError("sweep.values must be non-empty");
  }
  for (double v : sweep_values) {
    switch (sweep_axis) {
      case SweepAxis::kernel: {
        const int k = static_cast<int>(v);
        if (k != v || k < 1 || k % 2 == 0) {
          throw ConfigError("sweep value " + fmt_double(v) + " is not an odd kernel size");
        }
        break;
      }
      case SweepAxis::resamples: {
        const int u = static_cast<int>(v);
        if (u != v || u < 1) {
          throw ConfigError("sweep value " + fmt_double(v) + " is not a resample count >= 1");
        }
        break;
      }
      case SweepAxis::encoding_ratio:
        if (!(v > 0.0) || v > 1.0) {
          throw ConfigError("sweep value " + fmt_double(v) + " is not in (0, 1]");
        }
        break;
    }
  }
  if (denoiser.kind == DenoiserKind::trained && denoiser.weights_path.empty()) {
    throw ConfigError("denoiser = trained needs a weights path");
  }
  if (palette_denoiser.kind == DenoiserKind::trained && palette_denoiser.weights_path.empty()) {
    throw ConfigError("palette_denoiser = trained needs a weights path");
  }
}

NoiseSchedule ExperimentConfig::make_schedule() const {
  return build_schedule(schedule_steps, beta_start, beta_end, sigma_mode);
}

EditConfig ExperimentConfig::edit_config(EditMethod method) const {
  EditConfig c;
  c.method = method;
  c.element = dilate_element;
  switch (method) {
    case EditMethod::mededit:
      c.kernel = mededit_kernel;
      c.resamples = mededit_resamples;
      break;
    case EditMethod::naive_repaint:
      c.kernel = 1;
      c.resamples = naive_resamples;
      break;
    case EditMethod::sdedit:
      c.encoding_ratio = sdedit_encoding_ratio;
      break;
    case EditMethod::palette:
      c.kernel = palette_kernel;
      break;
  }
  return c;
}

std::string ExperimentConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, handler] : key_table()) {
    out += key;
    out += " = ";
    out += handler.get(*this);
    out += "\n";
  }
  return out;
}

uint64_t ExperimentConfig::config_hash() const {
  const std::string text = canonical_text();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace cfdiff
