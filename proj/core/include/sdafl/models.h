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

#ifndef SDAFL_MODELS_H_
#define SDAFL_MODELS_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "sdafl/mlp.h"
#include "sdafl/param_vector.h"
#include "sdafl/tensor.h"

namespace sdafl::models {

// Lower bound applied to probabilities before taking logs.
inline constexpr double kLogClamp = 1e-12;

// Row-wise numerically stable softmax.
Matrix Softmax(const Matrix& logits);

// Mean over rows of -sum_c target_c * log(max(prob_c, kLogClamp)).
double CrossEntropy(const Matrix& probs, const Matrix& targets);
double CrossEntropy(const Matrix& probs, const std::vector<int>& labels);

// Classifier f(w; x): MLP logits followed by softmax.
class ClassifierModel {
 public:
  ClassifierModel() = default;
  explicit ClassifierModel(Mlp net);

  static ClassifierModel Initialized(int input_dim, int num_classes,
                                     uint64_t seed, int hidden_width = 128);
  static MlpSpec DefaultSpec(int input_dim, int num_classes,
                             int hidden_width = 128);

  int num_classes() const { return net_.spec().output_dim; }
  int input_dim() const { return net_.spec().input_dim; }
  const Mlp& net() const { return net_; }
  const ParamVector& params() const { return net_.params(); }
  void set_params(ParamVector p) { net_.set_params(std::move(p)); }
  ClassifierModel WithParams(ParamVector p) const;

  Matrix Logits(const Matrix& x) const { return net_.Forward(x); }
  // Throws NonFiniteError when activations overflow.
  Matrix PredictProba(const Matrix& x) const;

  // Adds weight * CrossEntropy(softmax(f(x)), targets) to the returned value
  // and its parameter gradient to `grad` (if non-null). Targets may be soft;
  // rows summing to zero contribute nothing.
  double SoftTargetLoss(const Matrix& x, const Matrix& targets, double weight,
                        ParamVector* grad) const;

 private:
  Mlp net_;
};

// Generator G(z[, onehot(c)]) with sigmoid output in [0, 1].
struct GeneratorModel {
  Mlp net;
  int noise_dim = 0;
  // Width of the one-hot conditioning input; 0 for unconditional.
  int condition_classes = 0;

  static MlpSpec DefaultSpec(int noise_dim, int condition_classes,
                             int output_dim, int hidden_width);
  int output_dim() const { return net.spec().output_dim; }
  // `noise` has noise_dim columns; `conditions` one-hot rows (conditional
  // generators only).
  Matrix Generate(const Matrix& noise, const Matrix* conditions = nullptr,
                  MlpCache* cache = nullptr) const;
};

// Critic D(x): linear realism score in column 0, followed by
// `aux_classes` class logits for the auxiliary-classifier variant.
struct CriticModel {
  Mlp net;
  int aux_classes = 0;

  static MlpSpec DefaultSpec(int input_dim, int aux_classes, int hidden_width);
};

// Differentiable scalar objective. When `grad` is non-null it receives the
// gradient (same layout as the argument).
using LossFn = std::function<double(const ParamVector&, ParamVector* grad)>;

// Evaluates the gradient of `loss` at `p`. Throws NonFiniteError if the loss
// or any gradient entry is not finite.
ParamVector Grad(const LossFn& loss, const ParamVector& p);

// p - eta * g. Throws InvalidArgument on layout mismatch or negative eta.
ParamVector SgdStep(const ParamVector& p, const ParamVector& g, double eta);
void SgdStepInPlace(ParamVector& p, const ParamVector& g, double eta);

// First/second-moment optimizer state for GAN training.
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  Vector m;
  Vector v;
  int64_t t = 0;

  void Step(ParamVector& p, const ParamVector& g);
};

}  // namespace sdafl::models

#endif  // SDAFL_MODELS_H_
