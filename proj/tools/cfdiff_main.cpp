// Command line front end: generate-dataset, train, evaluate, sweep.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cfdiff/config.hpp"
#include "cfdiff/errors.hpp"
#include "cfdiff/harness.hpp"
#include "cfdiff/version.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the config seed list with one seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

cfdiff::ExperimentConfig load(const CommonArgs& args) {
  cfdiff::ExperimentConfig config = cfdiff::load_config(args.config_path);
  if (args.seed_set) {
    config.seeds = {args.seed};
    config.validate();
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterfactual diffusion editing on synthetic brain phantoms"};
  app.set_version_flag("--version", cfdiff::kArtifactVersion);
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, sweep_args;
  CLI::App* gen = app.add_subcommand("generate-dataset", "write train/test/healthy phantom sets");
  add_common(gen, gen_args);
  CLI::App* train = app.add_subcommand("train", "train the tiny denoiser on dataset.dir");
  add_common(train, train_args);
  CLI::App* eval = app.add_subcommand("evaluate", "run the editing methods and score them");
  add_common(eval, eval_args);
  CLI::App* sweep = app.add_subcommand("sweep", "re-run the evaluation over a parameter grid");
  add_common(sweep, sweep_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      cfdiff::cmd_generate_dataset(load(gen_args), gen_args.out_dir);
    } else if (train->parsed()) {
      cfdiff::cmd_train(load(train_args), train_args.out_dir);
    } else if (eval->parsed()) {
      cfdiff::cmd_evaluate(load(eval_args), eval_args.out_dir);
    } else if (sweep->parsed()) {
      cfdiff::cmd_sweep(load(sweep_args), sweep_args.out_dir);
    }
  } catch (const cfdiff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
