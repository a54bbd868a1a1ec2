// Copyright 2026 The sdafl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line front end: pretrain-gans, run, evaluate, plot.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <glog/logging.h>

#include "CLI11.hpp"
#include "sdafl/checkpoint.h"
#include "sdafl/config.h"
#include "sdafl/errors.h"
#include "sdafl/experiment.h"
#include "sdafl/metrics.h"
#include "sdafl/models.h"
#include "sdafl/plot.h"
#include "sdafl/round_loop.h"
#include "sdafl/run_dir.h"
#include "sdafl/synthetic_store.h"

namespace {

namespace fs = std::filesystem;
using sdafl::harness::ExperimentConfig;

constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

ExperimentConfig ResolveConfig(const std::string& path,
                               const std::optional<uint64_t>& seed) {
  ExperimentConfig cfg = sdafl::harness::LoadConfigOrManifest(path);
  if (seed) cfg.fl.seed = *seed;
  cfg.Validate();
  return cfg;
}

int PretrainGans(const std::string& config_path, const std::string& out,
                 const std::optional<uint64_t>& seed) {
  ExperimentConfig cfg = ResolveConfig(config_path, seed);
  const fs::path dir = out.empty() ? fs::path(cfg.gan_dir) : fs::path(out);
  if (dir.empty()) {
    throw sdafl::InvalidArgument("gan_dir: set it in the config or pass --out");
  }
  const auto data = sdafl::harness::PrepareData(cfg);
  const auto gans = sdafl::harness::PretrainGans(
      cfg, data, sdafl::fedcore::ThreadsFromEnv());
  sdafl::harness::SaveGans(dir, gans);
  std::ofstream(dir / "config.txt") << sdafl::harness::SerializeConfig(cfg);
  std::cout << "wrote " << gans.size() << " GAN checkpoints to " << dir.string()
            << "\n";
  return 0;
}

int Run(const std::string& config_path, const std::string& out,
        const std::string& resume, const std::optional<uint64_t>& seed) {
  sdafl::harness::RunOptions opts;
  opts.threads = sdafl::fedcore::ThreadsFromEnv();
  std::string cfg_path = config_path;
  if (!resume.empty()) {
    opts.out_dir = resume;
    opts.resume = true;
    if (cfg_path.empty()) cfg_path = (fs::path(resume) / "config.txt").string();
  } else {
    if (out.empty()) throw sdafl::InvalidArgument("run needs --out DIR");
    opts.out_dir = out;
  }
  if (cfg_path.empty()) throw sdafl::InvalidArgument("run needs --config PATH");
  const ExperimentConfig cfg = ResolveConfig(cfg_path, seed);
  const auto result = sdafl::harness::ExecuteRun(cfg, opts);
  std::cout << "run " << result.manifest.run_id << ": " << result.logs.size()
            << " rounds";
  if (!result.logs.empty()) {
    std::printf(", final accuracy %.4f", result.logs.back().accuracy);
  }
  std::cout << "\n";
  return 0;
}

int Evaluate(std::string config_path, std::string model_path,
             std::string store_path, const std::string& run_dir,
             const std::string& data_path, bool header) {
  if (!run_dir.empty()) {
    const fs::path dir(run_dir);
    if (!fs::is_directory(dir)) throw sdafl::IoError("no such run directory: " + run_dir);
    if (config_path.empty()) config_path = (dir / "config.txt").string();
    if (model_path.empty()) model_path = (dir / "final_model.ckpt").string();
    if (store_path.empty() && fs::exists(dir / "store.bin")) {
      store_path = (dir / "store.bin").string();
    }
  }
  if (config_path.empty()) throw sdafl::InvalidArgument("evaluate needs --config PATH");
  if (model_path.empty()) throw sdafl::InvalidArgument("evaluate needs --model PATH");
  const ExperimentConfig cfg = ResolveConfig(config_path, std::nullopt);
  const auto data = sdafl::harness::PrepareData(cfg);
  sdafl::data::LabeledDataset eval_set = data.test;
  if (!data_path.empty()) {
    sdafl::data::LoadOptions lo;
    lo.num_classes = data.test.num_classes;
    lo.pixel_max = cfg.data.pixel_max;
    eval_set = sdafl::data::LoadDataset(data_path, cfg.data.dataset_format, lo);
  }
  auto model = sdafl::models::ClassifierModel::Initialized(
      data.test.feature_dim(), data.test.num_classes, 0, cfg.fl.hidden_width);
  model.set_params(sdafl::LoadCheckpoint(model_path));
  const double acc = sdafl::metrics::Accuracy(model, eval_set);
  std::optional<double> fid;
  if (!store_path.empty()) {
    const auto store = sdafl::fedcore::LoadStore(store_path);
    fid = sdafl::harness::SyntheticQuality(cfg, data.train.examples,
                                           store.samples, data.test);
  }
  if (header) std::cout << (fid ? "accuracy,frechet_proxy\n" : "accuracy\n");
  std::printf("%.17g", acc);
  if (fid) std::printf(",%.17g", *fid);
  std::printf("\n");
  return 0;
}

int Plot(const std::vector<std::string>& runs, const std::string& out) {
  std::vector<fs::path> dirs(runs.begin(), runs.end());
  const auto written = sdafl::harness::PlotRuns(dirs, out.empty() ? "." : out);
  for (const fs::path& p : written) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Synthetic-data-aided federated learning simulator"};
  app.set_version_flag("--version", std::string(sdafl::harness::CodeVersion()));
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "More log output (repeatable)");

  std::string config_path, out_dir, resume_dir, model_path, store_path,
      run_dir, data_path;
  std::optional<uint64_t> seed;
  bool header = false;
  std::vector<std::string> plot_runs;

  auto* pretrain = app.add_subcommand("pretrain-gans",
                                      "Train one GAN per client and save them");
  pretrain->add_option("--config", config_path, "Experiment config")->required();
  pretrain->add_option("--out", out_dir, "Checkpoint directory (default gan_dir)");
  pretrain->add_option("--seed", seed, "Override the master seed");

  auto* run = app.add_subcommand("run", "Run a federated experiment");
  run->add_option("--config", config_path, "Experiment config or manifest.json");
  run->add_option("--out", out_dir, "Run directory");
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--resume", resume_dir, "Continue the run in DIR");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Print accuracy (and the Frechet proxy) as one CSV line");
  evaluate->add_option("run_dir", run_dir, "Run directory to evaluate");
  evaluate->add_option("--config", config_path, "Experiment config");
  evaluate->add_option("--model", model_path, "Classifier checkpoint");
  evaluate->add_option("--store", store_path, "Synthetic store snapshot");
  evaluate->add_option("--data", data_path, "Evaluate on this dataset instead");
  evaluate->add_flag("--header", header, "Print a CSV header line first");

  auto* plot = app.add_subcommand("plot", "Render SVG plots of runs");
  plot->add_option("runs", plot_runs, "Run directories")->required();
  plot->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);
  FLAGS_v = verbosity;

  try {
    if (*pretrain) return PretrainGans(config_path, out_dir, seed);
    if (*run) return Run(config_path, out_dir, resume_dir, seed);
    if (*evaluate) {
      return Evaluate(config_path, model_path, store_path, run_dir, data_path,
                      header);
    }
    if (*plot) return Plot(plot_runs, out_dir);
  } catch (const sdafl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const sdafl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
