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

#ifndef SDAFL_MLP_H_
#define SDAFL_MLP_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sdafl/param_vector.h"
#include "sdafl/tensor.h"

namespace sdafl {

enum class Activation { kIdentity, kRelu, kLeakyRelu, kSigmoid, kTanh };

std::string_view ActivationName(Activation a);
Activation ParseActivation(std::string_view name);
// True for activations whose derivative is piecewise constant.
bool IsPiecewiseLinear(Activation a);

// Fully connected network description. Layer l maps width(l) -> width(l+1)
// with weights stored row-major as segment "fc<l>.weight" (out x in) followed
// by "fc<l>.bias".
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;
  double leaky_slope = 0.2;

  int num_layers() const { return static_cast<int>(hidden.size()) + 1; }
  int width(int i) const;
  Layout MakeLayout() const;
  // e.g. "64-128-10 relu/identity".
  std::string Describe() const;

  bool operator==(const MlpSpec&) const = default;
};

// Per-layer activations kept by Forward for Backward. post[0] is the input;
// pre[l] / post[l + 1] are layer l's pre- and post-activation values.
struct MlpCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, ParamVector params);

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static Mlp Initialized(const MlpSpec& spec, uint64_t seed);

  const MlpSpec& spec() const { return spec_; }
  const ParamVector& params() const { return params_; }
  ParamVector& mutable_params() { return params_; }
  // Throws InvalidArgument naming the offending segment on layout mismatch.
  void set_params(ParamVector params);

  Matrix Forward(const Matrix& x, MlpCache* cache = nullptr) const;

  // Given d_out = dL/d(output) for the cached batch, accumulates dL/dparams
  // into `grad` (if non-null) and writes dL/dinput into `d_input` (if
  // non-null).
  void Backward(const MlpCache& cache, const Matrix& d_out, ParamVector* grad,
                Matrix* d_input = nullptr) const;

  // Activations after the last hidden layer (the input when there is none).
  Matrix Penultimate(const Matrix& x) const;

  Eigen::Map<const Matrix> Weight(int layer) const;
  Eigen::Map<const Vector> Bias(int layer) const;

  // Derivative of the hidden activation evaluated at `pre`, given the
  // post-activation values `post`.
  Matrix HiddenDerivative(const Matrix& pre, const Matrix& post) const;

 private:
  Matrix Activate(const Matrix& pre, Activation a) const;
  Matrix Derivative(const Matrix& pre, const Matrix& post, Activation a) const;

  MlpSpec spec_;
  ParamVector params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
};

}  // namespace sdafl

#endif  // SDAFL_MLP_H_
