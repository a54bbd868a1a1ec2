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

#ifndef SDAFL_FL_CONFIG_H_
#define SDAFL_FL_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace sdafl::fedcore {

enum class Algorithm {
  kSdafl,
  kFedAvg,
  kFedProx,
  kNaiveMix,
  kFedMix,
  kSdaflSemi,
  kLocalFixMatch,
};

std::string_view AlgorithmName(Algorithm a);
Algorithm ParseAlgorithm(std::string_view name);
// Algorithms that consume the synthetic store.
bool UsesSyntheticStore(Algorithm a);
bool IsSemiSupervised(Algorithm a);

// Federated training configuration. Defaults follow the reference setup:
// ten clients, full participation, tau = 0.95, lambda2 = 1, eta = 0.03,
// 4000 synthetic samples per client.
struct FLConfig {
  int rounds = 200;
  int clients = 10;
  double participation = 1.0;
  int local_steps = 90;
  int batch_size = 64;
  double learning_rate = 0.03;
  double threshold = 0.95;
  double mixup_alpha = 0.5;
  double lambda2 = 1.0;
  double prox_mu = 0.0;
  int server_steps = 50;
  int synthetic_per_client = 4000;
  Algorithm algorithm = Algorithm::kSdafl;
  uint64_t seed = 0;

  // Rounds during which the server refreshes pseudo labels; 0 = every round.
  int pseudo_label_rounds = 0;
  // Semi-supervised batch composition.
  int labeled_batch = 16;
  int unlabeled_batch = 64;
  // Mixing ratio for NaiveMix/FedMix local updates.
  double mix_weight = 0.1;
  // Examples averaged into one shared FedMix record.
  int mix_mean_size = 10;
  int hidden_width = 128;

  // Throws InvalidArgument naming the offending field.
  void Validate() const;
};

}  // namespace sdafl::fedcore

#endif  // SDAFL_FL_CONFIG_H_
