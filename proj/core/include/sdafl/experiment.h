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

#ifndef SDAFL_EXPERIMENT_H_
#define SDAFL_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sdafl/config.h"
#include "sdafl/data.h"
#include "sdafl/dpgan.h"
#include "sdafl/models.h"
#include "sdafl/round_loop.h"

namespace sdafl::harness {

struct PreparedData {
  data::LabeledDataset train;
  data::LabeledDataset test;
  std::vector<data::ClientData> clients;
  // Dataset tag or path, and a hash of the training examples and labels.
  std::string dataset_id;
  uint64_t content_hash = 0;
};

// Loads or renders the data, partitions it across clients and, for
// semi-supervised algorithms, splits each client.
PreparedData PrepareData(const ExperimentConfig& config);

// The DP settings applied to one client's GAN, if any.
std::optional<dpgan::DPConfig> ClientDp(const ExperimentConfig& config,
                                        std::size_t client_examples);

// Trains one GAN per client on all of its examples (labels are used only by
// the conditional variant). Clients train concurrently on up to `threads`
// workers.
std::vector<dpgan::GanPair> PretrainGans(const ExperimentConfig& config,
                                         const PreparedData& data,
                                         int threads = 0);

// Writes client_XX.generator.ckpt / client_XX.critic.ckpt, gans.json and
// privacy_report.txt into `dir`.
void SaveGans(const std::filesystem::path& dir,
              const std::vector<dpgan::GanPair>& gans);
// Rebuilds the pairs saved by SaveGans. Throws IoError when a checkpoint is
// missing.
std::vector<dpgan::GanPair> LoadGans(const std::filesystem::path& dir,
                                     const ExperimentConfig& config,
                                     const PreparedData& data);

// Clients, test set and (when the algorithm needs it) the synthetic store.
fedcore::ExperimentInputs BuildInputs(
    const ExperimentConfig& config, const PreparedData& data,
    const std::vector<dpgan::GanPair>* gans);

// Classifier trained once with plain SGD on `held_out`, used as a frozen
// feature map for the Frechet proxy.
models::ClassifierModel TrainFeatureClassifier(
    const data::LabeledDataset& held_out, uint64_t seed, int steps = 2000);

// Frechet proxy between `real` and `synth` with the configured feature map.
double SyntheticQuality(const ExperimentConfig& config, const Matrix& real,
                        const Matrix& synth,
                        const data::LabeledDataset& held_out);

}  // namespace sdafl::harness

#endif  // SDAFL_EXPERIMENT_H_
