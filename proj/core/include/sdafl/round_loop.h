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

#ifndef SDAFL_ROUND_LOOP_H_
#define SDAFL_ROUND_LOOP_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "sdafl/data.h"
#include "sdafl/fl_config.h"
#include "sdafl/local_update.h"
#include "sdafl/models.h"
#include "sdafl/synthetic_store.h"

namespace sdafl::fedcore {

struct ExperimentInputs {
  std::vector<data::ClientData> clients;
  data::LabeledDataset test;
  // Required by algorithms that use the synthetic store.
  std::optional<SyntheticStore> store;
};

// Everything that changes from one round to the next.
struct ExperimentState {
  int next_round = 0;
  models::ClassifierModel global;
  std::optional<SyntheticStore> store;
};

struct RoundLog {
  int round = 0;
  // Measured after the server update.
  double accuracy = 0.0;
  double accuracy_before_server_update = 0.0;
  double mean_local_loss = 0.0;
  double labeled_fraction = 0.0;
  double mean_confidence = 0.0;
  std::vector<int> participants;
  std::vector<std::size_t> client_samples;
  int server_steps_applied = 0;
  std::size_t pseudo_labels_changed = 0;
  double wall_seconds = 0.0;
};

// One federated experiment over fixed inputs. Thread-safe for concurrent
// reads; RunRound mutates only the state passed in.
class Simulation {
 public:
  // `threads` caps intra-round parallelism; 0 or 1 runs clients serially.
  Simulation(FLConfig config, ExperimentInputs inputs, int threads = 0);

  const FLConfig& config() const { return config_; }
  const ExperimentInputs& inputs() const { return inputs_; }

  ExperimentState InitialState() const;

  // Download, local updates, pseudo-label refresh, aggregation, server
  // update, evaluation. Errors are rethrown with the round number prepended.
  RoundLog RunRound(ExperimentState& state) const;

 private:
  std::vector<int> SampleParticipants(int round) const;
  UpdateResult LocalUpdate(const models::ClassifierModel& global,
                           const data::ClientData& client,
                           const ConfidentPool& pool, int round) const;

  FLConfig config_;
  ExperimentInputs inputs_;
  int threads_;
  std::optional<MixSource> mix_source_;
};

using RoundObserver =
    std::function<void(const ExperimentState& state, const RoundLog& log)>;

// Runs rounds state.next_round .. config.rounds - 1, invoking `observer`
// after each. Starts from the initial state when `state` is null.
std::vector<RoundLog> RunExperiment(const Simulation& sim,
                                    ExperimentState* state = nullptr,
                                    const RoundObserver& observer = {});

// Reads SDAFL_THREADS; unset or unparsable yields 0.
int ThreadsFromEnv();

}  // namespace sdafl::fedcore

#endif  // SDAFL_ROUND_LOOP_H_
