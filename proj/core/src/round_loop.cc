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

#include "sdafl/round_loop.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

#include <glog/logging.h>

#include "sdafl/errors.h"
#include "sdafl/metrics.h"
#include "sdafl/rng.h"
#include "parallel.h"

namespace sdafl::fedcore {
namespace {

template <typename E>
[[noreturn]] void Rethrow(int round, const E& e) {
  throw E("round " + std::to_string(round) + ": " + e.what());
}

}  // namespace

Simulation::Simulation(FLConfig config, ExperimentInputs inputs, int threads)
    : config_(std::move(config)), inputs_(std::move(inputs)), threads_(threads) {
  config_.Validate();
  if (inputs_.clients.empty()) throw InvalidArgument("no clients");
  if (static_cast<int>(inputs_.clients.size()) != config_.clients) {
    throw InvalidArgument("clients: config says " +
                          std::to_string(config_.clients) + " but " +
                          std::to_string(inputs_.clients.size()) +
                          " partitions were supplied");
  }
  inputs_.test.Validate();
  if (UsesSyntheticStore(config_.algorithm) && !inputs_.store) {
    throw InvalidArgument(std::string(AlgorithmName(config_.algorithm)) +
                          " needs a synthetic store");
  }
  if (IsSemiSupervised(config_.algorithm)) {
    for (const data::ClientData& c : inputs_.clients) {
      if (!c.unlabeled) {
        throw InvalidArgument("client " + std::to_string(c.client_id) +
                              " lacks an unlabeled split");
      }
    }
  }
  if (config_.algorithm == Algorithm::kFedMix) {
    mix_source_ = BuildFedMixSource(inputs_.clients, config_.mix_mean_size);
  } else if (config_.algorithm == Algorithm::kNaiveMix) {
    std::size_t total = 0;
    for (const data::ClientData& c : inputs_.clients) total += c.labeled.size();
    const int count = static_cast<int>(
        std::max<std::size_t>(1, total / static_cast<std::size_t>(
                                             config_.mix_mean_size)));
    mix_source_ = BuildNaiveMixSource(inputs_.clients, count, config_.seed);
  }
}

ExperimentState Simulation::InitialState() const {
  ExperimentState s;
  s.global = models::ClassifierModel::Initialized(
      inputs_.test.feature_dim(), inputs_.test.num_classes,
      DeriveSeed(config_.seed, "global_init"), config_.hidden_width);
  s.store = inputs_.store;
  return s;
}

std::vector<int> Simulation::SampleParticipants(int round) const {
  const int k = config_.clients;
  const int m = std::clamp(
      static_cast<int>(std::lround(config_.participation * k)), 1, k);
  std::vector<int> ids(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) ids[static_cast<std::size_t>(i)] = i;
  if (m == k) return ids;
  Rng rng = Rng::Named(config_.seed, "participation",
                       {static_cast<uint64_t>(round)});
  rng.Shuffle(ids);
  ids.resize(static_cast<std::size_t>(m));
  std::sort(ids.begin(), ids.end());
  return ids;
}

UpdateResult Simulation::LocalUpdate(const models::ClassifierModel& global,
                                     const data::ClientData& client,
                                     const ConfidentPool& pool,
                                     int round) const {
  const StepContext ctx{config_.seed, round, client.client_id};
  switch (config_.algorithm) {
    case Algorithm::kSdafl:
      return LocalUpdateSdafl(global, client, pool, config_, ctx);
    case Algorithm::kFedAvg:
      return LocalUpdateFedAvg(global, client, config_, ctx);
    case Algorithm::kFedProx:
      return LocalUpdateFedProx(global, client, config_, ctx);
    case Algorithm::kNaiveMix:
    case Algorithm::kFedMix:
      return LocalUpdateMix(global, client, *mix_source_, config_, ctx);
    case Algorithm::kSdaflSemi:
      return LocalUpdateSemi(global, client, &pool, config_, ctx);
    case Algorithm::kLocalFixMatch:
      return LocalUpdateSemi(global, client, nullptr, config_, ctx);
  }
  throw InvalidArgument("unhandled algorithm");
}

RoundLog Simulation::RunRound(ExperimentState& state) const {
  const int t = state.next_round;
  try {
    const auto start = std::chrono::steady_clock::now();
    RoundLog log;
    log.round = t;
    log.participants = SampleParticipants(t);
    const bool use_store = UsesSyntheticStore(config_.algorithm);

    // Download: the global model plus the current labels.
    ConfidentPool pool;
    if (use_store) pool = ConfidentPool::FromStore(*state.store);

    const std::size_t m = log.participants.size();
    std::vector<UpdateResult> results(m);
    internal::ParallelFor(m, threads_, [&](std::size_t i) {
      const data::ClientData& client =
          inputs_.clients[static_cast<std::size_t>(log.participants[i])];
      results[i] = LocalUpdate(state.global, client, pool, t);
    });

    double loss = 0;
    std::vector<ParamVector> uploads;
    uploads.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const data::ClientData& client =
          inputs_.clients[static_cast<std::size_t>(log.participants[i])];
      log.client_samples.push_back(client.TotalExamples());
      loss += results[i].mean_loss;
      uploads.push_back(results[i].params);
    }
    log.mean_local_loss = loss / static_cast<double>(m);

    const bool refresh =
        config_.pseudo_label_rounds == 0 || t < config_.pseudo_label_rounds;
    if (use_store && refresh) {
      std::vector<models::ClassifierModel> locals;
      locals.reserve(m);
      for (std::size_t i = 0; i < m; ++i) {
        locals.push_back(state.global.WithParams(uploads[i]));
      }
      std::map<int, const models::ClassifierModel*> by_client;
      for (std::size_t i = 0; i < m; ++i) {
        by_client[log.participants[i]] = &locals[i];
      }
      log.pseudo_labels_changed =
          UpdatePseudoLabels(*state.store, by_client, config_.threshold, t)
              .changed;
    }

    state.global.set_params(Aggregate(uploads));
    log.accuracy_before_server_update =
        metrics::Accuracy(state.global, inputs_.test);

    if (use_store && config_.server_steps > 0) {
      const ConfidentPool server_pool = ConfidentPool::FromStore(*state.store);
      const UpdateResult r = ServerUpdate(state.global, server_pool,
                                          config_.server_steps, config_,
                                          config_.seed, t);
      log.server_steps_applied = r.steps;
      state.global.set_params(r.params);
    }
    log.accuracy = metrics::Accuracy(state.global, inputs_.test);

    if (use_store) {
      const metrics::LabelCoverage cov =
          metrics::ComputeLabelCoverage(*state.store);
      log.labeled_fraction = cov.labeled_fraction;
      log.mean_confidence = cov.mean_confidence;
    }
    state.next_round = t + 1;
    log.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    return log;
  } catch (const InvalidArgument& e) {
    Rethrow(t, e);
  } catch (const NonFiniteError& e) {
    Rethrow(t, e);
  }
}

std::vector<RoundLog> RunExperiment(const Simulation& sim,
                                    ExperimentState* state,
                                    const RoundObserver& observer) {
  ExperimentState local;
  if (state == nullptr) {
    local = sim.InitialState();
    state = &local;
  }
  std::vector<RoundLog> logs;
  while (state->next_round < sim.config().rounds) {
    logs.push_back(sim.RunRound(*state));
    const RoundLog& log = logs.back();
    VLOG(1) << "round " << log.round << " accuracy " << log.accuracy
            << " labeled " << log.labeled_fraction;
    if (observer) observer(*state, log);
  }
  return logs;
}

int ThreadsFromEnv() {
  const char* v = std::getenv("SDAFL_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0) {
    LOG(WARNING) << "ignoring SDAFL_THREADS=" << v;
    return 0;
  }
  return static_cast<int>(std::min<long>(n, 1024));
}

}  // namespace sdafl::fedcore
