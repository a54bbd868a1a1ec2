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

#include "sdafl/models.h"

#include <cmath>

#include "sdafl/errors.h"

namespace sdafl::models {

Matrix Softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double CrossEntropy(const Matrix& probs, const Matrix& targets) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols()) {
    throw InvalidArgument("cross-entropy shape mismatch");
  }
  if (probs.rows() == 0) throw InvalidArgument("cross-entropy of empty batch");
  const double total =
      -(targets.array() * probs.array().max(kLogClamp).log()).sum();
  return total / static_cast<double>(probs.rows());
}

double CrossEntropy(const Matrix& probs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw InvalidArgument("cross-entropy shape mismatch");
  }
  if (labels.empty()) throw InvalidArgument("cross-entropy of empty batch");
  double total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= probs.cols()) {
      throw InvalidArgument("label outside probability columns");
    }
    total -= std::log(
        std::max(probs(static_cast<Eigen::Index>(i), labels[i]), kLogClamp));
  }
  return total / static_cast<double>(labels.size());
}

ClassifierModel::ClassifierModel(Mlp net) : net_(std::move(net)) {}

MlpSpec ClassifierModel::DefaultSpec(int input_dim, int num_classes,
                                     int hidden_width) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  spec.hidden = {hidden_width};
  spec.output_dim = num_classes;
  spec.hidden_activation = Activation::kRelu;
  spec.output_activation = Activation::kIdentity;
  return spec;
}

ClassifierModel ClassifierModel::Initialized(int input_dim, int num_classes,
                                             uint64_t seed, int hidden_width) {
  return ClassifierModel(Mlp::Initialized(
      DefaultSpec(input_dim, num_classes, hidden_width), seed));
}

ClassifierModel ClassifierModel::WithParams(ParamVector p) const {
  ClassifierModel out(*this);
  out.set_params(std::move(p));
  return out;
}

Matrix ClassifierModel::PredictProba(const Matrix& x) const {
  const Matrix logits = net_.Forward(x);
  if (!logits.allFinite()) throw NonFiniteError("non-finite classifier logits");
  return Softmax(logits);
}

double ClassifierModel::SoftTargetLoss(const Matrix& x, const Matrix& targets,
                                       double weight, ParamVector* grad) const {
  if (targets.rows() != x.rows() || targets.cols() != num_classes()) {
    throw InvalidArgument("target shape mismatch");
  }
  MlpCache cache;
  const Matrix logits = net_.Forward(x, grad ? &cache : nullptr);
  if (!logits.allFinite()) throw NonFiniteError("non-finite classifier logits");
  const Matrix probs = Softmax(logits);
  const double loss = weight * CrossEntropy(probs, targets);
  if (grad) {
    // d/dlogits of -sum_c y_c log softmax_c = p * sum(y) - y.
    const Vector mass = targets.rowwise().sum();
    Matrix d = probs.array().colwise() * mass.array();
    d -= targets;
    d *= weight / static_cast<double>(x.rows());
    net_.Backward(cache, d, grad);
  }
  return loss;
}

MlpSpec GeneratorModel::DefaultSpec(int noise_dim, int condition_classes,
                                    int output_dim, int hidden_width) {
  MlpSpec spec;
  spec.input_dim = noise_dim + condition_classes;
  spec.hidden = {hidden_width, hidden_width};
  spec.output_dim = output_dim;
  spec.hidden_activation = Activation::kLeakyRelu;
  spec.output_activation = Activation::kSigmoid;
  return spec;
}

Matrix GeneratorModel::Generate(const Matrix& noise, const Matrix* conditions,
                                MlpCache* cache) const {
  if (noise.cols() != noise_dim) {
    throw InvalidArgument("generator expects noise width " +
                          std::to_string(noise_dim));
  }
  if (condition_classes == 0) return net.Forward(noise, cache);
  if (!conditions || conditions->rows() != noise.rows() ||
      conditions->cols() != condition_classes) {
    throw InvalidArgument("conditional generator needs one-hot conditions");
  }
  Matrix input(noise.rows(), noise_dim + condition_classes);
  input << noise, *conditions;
  return net.Forward(input, cache);
}

MlpSpec CriticModel::DefaultSpec(int input_dim, int aux_classes,
                                 int hidden_width) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  spec.hidden = {hidden_width, hidden_width};
  spec.output_dim = 1 + aux_classes;
  spec.hidden_activation = Activation::kLeakyRelu;
  spec.output_activation = Activation::kIdentity;
  return spec;
}

ParamVector Grad(const LossFn& loss, const ParamVector& p) {
  ParamVector g = p.ZerosLike();
  const double value = loss(p, &g);
  if (!std::isfinite(value)) throw NonFiniteError("loss is not finite");
  if (!g.AllFinite()) throw NonFiniteError("gradient is not finite");
  if (!g.SameLayout(p)) throw InvalidArgument("gradient layout mismatch");
  return g;
}

ParamVector SgdStep(const ParamVector& p, const ParamVector& g, double eta) {
  ParamVector out = p;
  SgdStepInPlace(out, g, eta);
  return out;
}

void SgdStepInPlace(ParamVector& p, const ParamVector& g, double eta) {
  if (!p.SameLayout(g)) throw InvalidArgument("SGD layout mismatch");
  if (!(eta >= 0)) throw InvalidArgument("learning rate must be nonnegative");
  p.mutable_values() -= eta * g.values();
}

void AdamState::Step(ParamVector& p, const ParamVector& g) {
  if (!p.SameLayout(g)) throw InvalidArgument("Adam layout mismatch");
  if (m.size() != g.values().size()) {
    m = Vector::Zero(g.values().size());
    v = Vector::Zero(g.values().size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1 - beta1) * g.values();
  v = beta2 * v + (1 - beta2) * g.values().cwiseAbs2();
  const double c1 = 1 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1 - std::pow(beta2, static_cast<double>(t));
  p.mutable_values().array() -=
      learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
}

}  // namespace sdafl::models
