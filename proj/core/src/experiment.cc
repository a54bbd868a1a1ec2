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

#include "sdafl/experiment.h"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <glog/logging.h>
#include "json.hpp"

#include "sdafl/checkpoint.h"
#include "sdafl/errors.h"
#include "sdafl/fl_config.h"
#include "sdafl/metrics.h"
#include "sdafl/rng.h"
#include "sdafl/synthetic_store.h"
#include "sdafl/toy_data.h"
#include "parallel.h"

namespace sdafl::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

data::LabeledDataset LoadFile(const std::string& path,
                              const ExperimentConfig& config,
                              const std::string& labels_path) {
  data::LoadOptions opts;
  opts.num_classes = config.data.num_classes;
  opts.pixel_max = config.data.pixel_max;
  opts.labels_path = labels_path;
  return data::LoadDataset(path, config.data.dataset_format, opts);
}

Matrix AllExamples(const data::ClientData& c) {
  if (!c.unlabeled || c.unlabeled->rows() == 0) return c.labeled.examples;
  Matrix out(c.labeled.examples.rows() + c.unlabeled->rows(),
             c.labeled.examples.cols());
  out << c.labeled.examples, *c.unlabeled;
  return out;
}

std::string ClientFile(const fs::path& dir, int client, const char* part) {
  char name[64];
  std::snprintf(name, sizeof name, "client_%02d.%s.ckpt", client, part);
  return (dir / name).string();
}

}  // namespace

PreparedData PrepareData(const ExperimentConfig& config) {
  config.Validate();
  PreparedData out;
  if (config.data.dataset == kBuiltinDigits) {
    out.train = data::RenderDigits(
        config.data.builtin_per_class,
        DeriveSeed(config.data.data_seed, "train_digits"));
    out.test = data::RenderDigits(
        config.data.builtin_test_per_class,
        DeriveSeed(config.data.data_seed, "test_digits"));
  } else {
    if (!fs::exists(config.data.dataset)) {
      throw IoError("dataset: file not found: " + config.data.dataset);
    }
    if (!fs::exists(config.data.test_dataset)) {
      throw IoError("test_dataset: file not found: " +
                    config.data.test_dataset);
    }
    out.train = LoadFile(config.data.dataset, config, config.data.dataset_labels);
    out.test = LoadFile(config.data.test_dataset, config, "");
    const int classes = std::max(out.train.num_classes, out.test.num_classes);
    out.train.num_classes = classes;
    out.test.num_classes = classes;
    if (out.train.feature_dim() != out.test.feature_dim()) {
      throw InvalidArgument("test_dataset: feature dimension differs from dataset");
    }
  }
  out.dataset_id = config.data.dataset;
  out.content_hash = data::ContentHash(out.train);
  out.clients = data::PartitionNonIid(out.train, config.Partition());
  if (fedcore::IsSemiSupervised(config.fl.algorithm)) {
    for (data::ClientData& c : out.clients) {
      const std::size_t keep = std::min<std::size_t>(
          static_cast<std::size_t>(config.data.labeled_per_client),
          c.labeled.size());
      c = data::SplitSemiSupervised(c, keep, config.fl.seed);
    }
  }
  return out;
}

std::optional<dpgan::DPConfig> ClientDp(const ExperimentConfig& config,
                                        std::size_t client_examples) {
  if (!config.dp_enabled) return std::nullopt;
  const int batch = std::min<int>(config.gan.batch_size,
                                  static_cast<int>(client_examples));
  dpgan::DPConfig dp = dpgan::DPConfig::ForDataset(
      config.dp_epsilon, config.dp_delta, client_examples, batch,
      config.dp_clip_bound);
  dp.clip_mode = config.dp_clip_mode;
  dp.log_base = config.dp_log_base;
  dp.sigma = dpgan::DpSigma(dp.epsilon, dp.delta, dp.q, dp.n_d, dp.log_base);
  return dp;
}

std::vector<dpgan::GanPair> PretrainGans(const ExperimentConfig& config,
                                         const PreparedData& data,
                                         int threads) {
  const std::size_t k = data.clients.size();
  std::vector<dpgan::GanPair> gans(k);
  auto train_one = [&](std::size_t i) {
    const data::ClientData& c = data.clients[i];
    dpgan::GanConfig g = config.gan;
    g.seed = DeriveSeed(config.fl.seed, "gan", {static_cast<uint64_t>(i)});
    if (g.conditional) {
      g.batch_size = std::min<int>(g.batch_size,
                                   static_cast<int>(c.labeled.size()));
      gans[i] = dpgan::TrainAcWganGp(c.labeled, g,
                                     ClientDp(config, c.labeled.size()),
                                     c.client_id);
    } else {
      const Matrix x = AllExamples(c);
      g.batch_size = std::min<int>(g.batch_size, static_cast<int>(x.rows()));
      gans[i] = dpgan::TrainWganGp(
          x, g, ClientDp(config, static_cast<std::size_t>(x.rows())),
          c.client_id);
    }
    LOG(INFO) << "client " << c.client_id << " GAN trained";
  };
  internal::ParallelFor(k, threads, train_one);
  return gans;
}

void SaveGans(const fs::path& dir, const std::vector<dpgan::GanPair>& gans) {
  fs::create_directories(dir);
  json index = json::array();
  for (const dpgan::GanPair& g : gans) {
    SaveCheckpoint(ClientFile(dir, g.owner_client, "generator"),
                   g.generator.net.params());
    SaveCheckpoint(ClientFile(dir, g.owner_client, "critic"),
                   g.critic.net.params());
    json entry = {{"client", g.owner_client},
                  {"conditional", g.config.conditional},
                  {"num_classes", g.num_classes},
                  {"classes", g.classes},
                  {"critic_updates", g.stats.critic_updates},
                  {"generator_updates", g.stats.generator_updates}};
    if (g.dp) entry["sigma_n"] = g.dp->sigma;
    index.push_back(entry);
  }
  std::ofstream(dir / "gans.json") << index.dump(2) << '\n';
  std::ofstream report(dir / "privacy_report.txt");
  dpgan::WritePrivacyReport(report, gans);
  if (!report) throw IoError("cannot write privacy report in " + dir.string());
}

std::vector<dpgan::GanPair> LoadGans(const fs::path& dir,
                                     const ExperimentConfig& config,
                                     const PreparedData& data) {
  const fs::path index_path = dir / "gans.json";
  std::ifstream in(index_path);
  if (!in) throw IoError("missing GAN index " + index_path.string());
  json index;
  try {
    index = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("corrupt GAN index " + index_path.string() + ": " + e.what());
  }
  if (index.size() != data.clients.size()) {
    throw InvalidArgument("gan_dir holds " + std::to_string(index.size()) +
                          " GANs for " + std::to_string(data.clients.size()) +
                          " clients");
  }
  std::vector<dpgan::GanPair> gans;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const json& e = index[i];
    const int client = e.at("client").get<int>();
    const bool conditional = e.at("conditional").get<bool>();
    if (conditional != config.gan.conditional) {
      throw InvalidArgument("gan_conditional does not match the checkpoints in " +
                            dir.string());
    }
    const data::ClientData& c = data.clients.at(static_cast<std::size_t>(client));
    const int aux = conditional ? e.at("num_classes").get<int>() : 0;
    dpgan::GanPair pair = dpgan::InitGanPair(
        data.train.feature_dim(), config.gan,
        ClientDp(config, conditional ? c.labeled.size() : c.TotalExamples()),
        client, aux);
    pair.config.conditional = conditional;
    pair.classes = e.at("classes").get<std::vector<int>>();
    pair.generator.net.set_params(
        LoadCheckpoint(ClientFile(dir, client, "generator")));
    pair.critic.net.set_params(LoadCheckpoint(ClientFile(dir, client, "critic")));
    gans.push_back(std::move(pair));
  }
  return gans;
}

fedcore::ExperimentInputs BuildInputs(const ExperimentConfig& config,
                                      const PreparedData& data,
                                      const std::vector<dpgan::GanPair>* gans) {
  fedcore::ExperimentInputs in;
  in.clients = data.clients;
  in.test = data.test;
  if (fedcore::UsesSyntheticStore(config.fl.algorithm)) {
    if (gans == nullptr) {
      throw InvalidArgument(
          "gan_dir: algorithm " +
          std::string(fedcore::AlgorithmName(config.fl.algorithm)) +
          " needs pretrained GANs");
    }
    in.store = fedcore::BuildSyntheticStore(
        *gans, config.fl.synthetic_per_client,
        DeriveSeed(config.fl.seed, "synthetic_store"));
  }
  return in;
}

models::ClassifierModel TrainFeatureClassifier(
    const data::LabeledDataset& held_out, uint64_t seed, int steps) {
  held_out.Validate();
  if (held_out.size() == 0) throw InvalidArgument("empty held-out set");
  models::ClassifierModel model = models::ClassifierModel::Initialized(
      held_out.feature_dim(), held_out.num_classes, seed);
  Rng rng = Rng::Named(seed, "feature_classifier_batches");
  const Matrix targets = held_out.OneHotLabels();
  const std::size_t b = std::min<std::size_t>(64, held_out.size());
  std::vector<std::size_t> order;
  std::size_t pos = 0;
  for (int s = 0; s < steps; ++s) {
    std::vector<std::size_t> idx;
    while (idx.size() < b) {
      if (pos == order.size()) {
        order = rng.Permutation(held_out.size());
        pos = 0;
      }
      idx.push_back(order[pos++]);
    }
    ParamVector g = model.params().ZerosLike();
    model.SoftTargetLoss(data::GatherRows(held_out.examples, idx),
                         data::GatherRows(targets, idx), 1.0, &g);
    model.set_params(models::SgdStep(model.params(), g, 0.1));
  }
  return model;
}

double SyntheticQuality(const ExperimentConfig& config, const Matrix& real,
                        const Matrix& synth,
                        const data::LabeledDataset& held_out) {
  if (config.frechet_feature == FeatureKind::kRaw) {
    return metrics::FrechetProxy(real, synth, metrics::RawFeatures());
  }
  const models::ClassifierModel feature_net = TrainFeatureClassifier(
      held_out, DeriveSeed(config.data.data_seed, "feature_classifier"));
  return metrics::FrechetProxy(real, synth,
                               metrics::PenultimateFeatures(feature_net));
}

}  // namespace sdafl::harness
