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

#ifndef SDAFL_LOCAL_UPDATE_H_
#define SDAFL_LOCAL_UPDATE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdafl/data.h"
#include "sdafl/fl_config.h"
#include "sdafl/models.h"
#include "sdafl/param_vector.h"
#include "sdafl/rng.h"
#include "sdafl/synthetic_store.h"
#include "sdafl/tensor.h"

namespace sdafl::fedcore {

struct MixedBatch {
  Matrix x;
  Matrix y;
};

// x_bar = lambda * x_synth + (1 - lambda) * x_real, same for labels.
MixedBatch MixupBatch(const Matrix& x_real, const Matrix& y_real,
                      const Matrix& x_synth, const Matrix& y_synth,
                      double lambda);

// l1 + lambda2 * l2 with
//   l1 = lambda1 * CE(f(x_bar), y_synth) + (1 - lambda1) * CE(f(x_bar), y_real)
//   l2 = CE(f(x_real), y_real)
// Accumulates the parameter gradient into `grad` when non-null.
double LossSdafl(const models::ClassifierModel& model, const Matrix& x_real,
                 const Matrix& y_real, const Matrix& x_synth,
                 const Matrix& y_synth, double lambda1, double lambda2,
                 ParamVector* grad);

// Labeled synthetic records as seen by clients at download time.
struct ConfidentPool {
  const SyntheticStore* store = nullptr;
  std::vector<std::size_t> indices;
  std::vector<int> labels;

  static ConfidentPool FromStore(const SyntheticStore& store);
  bool empty() const { return indices.empty(); }
  std::size_t size() const { return indices.size(); }
};

// Shared data for NaiveMix / FedMix, built once before training.
struct MixSource {
  Matrix x;
  Matrix y;
};

// Each client contributes the means of consecutive groups of `mean_size`
// local examples (and the means of their one-hot labels).
MixSource BuildFedMixSource(const std::vector<data::ClientData>& clients,
                            int mean_size);
// `count` records, each the midpoint of two examples held by different
// clients (labels averaged likewise).
MixSource BuildNaiveMixSource(const std::vector<data::ClientData>& clients,
                              int count, uint64_t seed);

// Identifies the random streams of one client in one round. Streams depend
// only on (seed, round, client), never on the algorithm.
struct StepContext {
  uint64_t seed = 0;
  int round = 0;
  int client = 0;
};

struct UpdateResult {
  ParamVector params;
  double mean_loss = 0.0;
  int steps = 0;
};

UpdateResult LocalUpdateSdafl(const models::ClassifierModel& global,
                              const data::ClientData& client,
                              const ConfidentPool& pool, const FLConfig& cfg,
                              const StepContext& ctx);

// Plain cross-entropy SGD; with prox_mu > 0 adds mu/2 * ||w - w_t||^2.
UpdateResult LocalUpdateFedAvg(const models::ClassifierModel& global,
                               const data::ClientData& client,
                               const FLConfig& cfg, const StepContext& ctx);
UpdateResult LocalUpdateFedProx(const models::ClassifierModel& global,
                                const data::ClientData& client,
                                const FLConfig& cfg, const StepContext& ctx);

// Mixup between the local batch and a mix-source batch with fixed ratio
// cfg.mix_weight.
UpdateResult LocalUpdateMix(const models::ClassifierModel& global,
                            const data::ClientData& client,
                            const MixSource& source, const FLConfig& cfg,
                            const StepContext& ctx);

// Semi-supervised step: lambda2 * CE on the labeled batch, masked CE on the
// unlabeled examples whose current prediction clears tau, plus the synthetic
// mixup term when `pool` is non-null (null gives the FixMatch-style
// baseline).
UpdateResult LocalUpdateSemi(const models::ClassifierModel& global,
                             const data::ClientData& client,
                             const ConfidentPool* pool, const FLConfig& cfg,
                             const StepContext& ctx);

// `steps` SGD steps on LossSdafl, each over two disjoint labeled synthetic
// batches (first plays the real role). No-op when fewer than two labeled
// records exist.
UpdateResult ServerUpdate(const models::ClassifierModel& global,
                          const ConfidentPool& pool, int steps,
                          const FLConfig& cfg, uint64_t seed, int round);

// Elementwise arithmetic mean. Throws on empty input or layout mismatch.
ParamVector Aggregate(const std::vector<ParamVector>& models);

}  // namespace sdafl::fedcore

#endif  // SDAFL_LOCAL_UPDATE_H_
