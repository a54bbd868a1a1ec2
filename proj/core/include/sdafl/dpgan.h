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

#ifndef SDAFL_DPGAN_H_
#define SDAFL_DPGAN_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "sdafl/data.h"
#include "sdafl/models.h"
#include "sdafl/param_vector.h"
#include "sdafl/rng.h"
#include "sdafl/tensor.h"

namespace sdafl::dpgan {

enum class LogBase { kNatural, kTen };

// Gaussian noise multiplier for (epsilon, delta)-DP critic training:
//   sigma = (2 q / epsilon) * sqrt(n_d * log(1 / delta))
// with q the per-instance sampling probability and n_d the number of batches
// in the local dataset. Throws InvalidArgument outside epsilon > 0,
// 0 < delta < 1, 0 < q <= 1, n_d >= 1.
double DpSigma(double epsilon, double delta, double q, int64_t n_d,
               LogBase base = LogBase::kNatural);

struct GanConfig {
  int iterations = 2000;
  int critic_steps = 5;
  int batch_size = 64;
  double gp_weight = 10.0;
  int noise_dim = 16;
  uint64_t seed = 0;
  bool conditional = false;
  int hidden_width = 64;
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  // Weight of the auxiliary classification loss (conditional variant).
  double aux_weight = 1.0;

  void Validate() const;
};

enum class ClipMode { kMinibatch, kPerExample };

struct DPConfig {
  double epsilon = 5.0;
  double delta = 1e-5;
  double q = 0.01;
  int64_t n_d = 100;
  double clip_bound = 1.0;
  double sigma = 0.0;
  ClipMode clip_mode = ClipMode::kMinibatch;
  LogBase log_base = LogBase::kNatural;

  // Fills `sigma` from DpSigma.
  static DPConfig Derive(double epsilon, double delta, double q, int64_t n_d,
                         double clip_bound = 1.0,
                         LogBase base = LogBase::kNatural);
  // q = batch_size / dataset_size, n_d = ceil(dataset_size / batch_size).
  static DPConfig ForDataset(double epsilon, double delta,
                             std::size_t dataset_size, int batch_size,
                             double clip_bound = 1.0);
  void Validate() const;
};

// Counters a caller can use to audit a training run.
struct TrainStats {
  int64_t critic_updates = 0;
  int64_t privatized_critic_updates = 0;
  int64_t generator_updates = 0;
  // Reads of unprivatized critic gradients, split by training phase.
  int64_t raw_gradient_reads_critic_phase = 0;
  int64_t raw_gradient_reads_generator_phase = 0;
  double last_critic_loss = 0.0;
  double last_generator_loss = 0.0;
};

struct GanPair {
  models::GeneratorModel generator;
  models::CriticModel critic;
  GanConfig config;
  std::optional<DPConfig> dp;
  int owner_client = 0;
  // Classes seen in training (conditional variant); conditioning draws from
  // these.
  std::vector<int> classes;
  int num_classes = 0;
  TrainStats stats;
};

// Freshly initialized pair with the default architectures. aux_classes > 0
// gives the conditional variant.
GanPair InitGanPair(int data_dim, const GanConfig& config,
                    const std::optional<DPConfig>& dp, int owner_client,
                    int aux_classes);

struct PenaltyResult {
  double value = 0.0;
  ParamVector grad;
};

// gamma * mean_i (||grad_x D(x_hat_i)||_2 - 1)^2 at the given interpolates,
// with its gradient w.r.t. the critic parameters. D is column
// `output_column` of the critic. Requires piecewise-linear hidden activations
// and an identity output.
PenaltyResult GradientPenaltyAt(const Mlp& critic, const Matrix& x_hat,
                                double gamma, int output_column = 0);

// Interpolates x_hat = u * real + (1 - u) * fake with u ~ U(0,1) per row drawn
// from `seed`, then evaluates GradientPenaltyAt.
PenaltyResult GradientPenalty(const models::CriticModel& critic,
                              const Matrix& real, const Matrix& fake,
                              double gamma, uint64_t seed);

// Critic objective at fixed batches and interpolates:
//   mean D(fake) - mean D(real) + penalty(x_hat)
// plus aux_weight * (CE on real labels + CE on fake labels) when labels are
// given. Accumulates the parameter gradient into `grad` when non-null.
struct CriticBatch {
  Matrix real;
  Matrix fake;
  Matrix x_hat;
  const std::vector<int>* real_labels = nullptr;
  const std::vector<int>* fake_labels = nullptr;
};
double CriticLoss(const models::CriticModel& critic, const CriticBatch& batch,
                  double gamma, double aux_weight, ParamVector* grad);

// Scales g to L2 norm `clip_bound` when it is longer.
ParamVector ClipToNorm(const ParamVector& g, double clip_bound);

// Clips g to norm clip_bound, then adds N(0, (sigma * clip_bound)^2) noise to
// every coordinate.
ParamVector PrivatizeGradients(const ParamVector& g, double clip_bound,
                               double sigma, Rng& rng);

// WGAN-GP training: `critic_steps` critic updates (privatized when `dp` is
// set) per generator update. The generator only sees the critic's parameters.
GanPair TrainWganGp(const Matrix& data, const GanConfig& config,
                    const std::optional<DPConfig>& dp, int owner_client = 0);

// Auxiliary-classifier WGAN-GP: conditional generator, critic emitting a
// realism score plus class logits. Requires config.conditional.
GanPair TrainAcWganGp(const data::LabeledDataset& data, const GanConfig& config,
                      const std::optional<DPConfig>& dp, int owner_client = 0);

// n unconditional samples in [0, 1], deterministic in `seed`.
Matrix Sample(const models::GeneratorModel& generator, int n, uint64_t seed);

struct LabeledSamples {
  Matrix examples;
  std::vector<int> labels;
};
// n samples conditioned on `cls`; every returned label equals `cls`.
LabeledSamples SampleConditional(const models::GeneratorModel& generator,
                                 int n, int cls, uint64_t seed);

// One line per DP-trained pair:
// `client=<k> epsilon=.. delta=.. q=.. n_d=.. clip_bound=.. sigma_n=..`.
void WritePrivacyReport(std::ostream& os, const std::vector<GanPair>& pairs);

}  // namespace sdafl::dpgan

#endif  // SDAFL_DPGAN_H_
