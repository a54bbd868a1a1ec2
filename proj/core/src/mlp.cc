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

#include "sdafl/mlp.h"

#include <cmath>

#include "sdafl/errors.h"
#include "sdafl/rng.h"

namespace sdafl {

std::string_view ActivationName(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kTanh:
      return "tanh";
  }
  return "unknown";
}

Activation ParseActivation(std::string_view name) {
  for (Activation a : {Activation::kIdentity, Activation::kRelu,
                       Activation::kLeakyRelu, Activation::kSigmoid,
                       Activation::kTanh}) {
    if (ActivationName(a) == name) return a;
  }
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

bool IsPiecewiseLinear(Activation a) {
  return a == Activation::kIdentity || a == Activation::kRelu ||
         a == Activation::kLeakyRelu;
}

int MlpSpec::width(int i) const {
  if (i == 0) return input_dim;
  if (i == num_layers()) return output_dim;
  return hidden[static_cast<std::size_t>(i - 1)];
}

Layout MlpSpec::MakeLayout() const {
  std::vector<std::pair<std::string, std::size_t>> segs;
  for (int l = 0; l < num_layers(); ++l) {
    const std::string prefix = "fc" + std::to_string(l);
    segs.emplace_back(prefix + ".weight",
                      static_cast<std::size_t>(width(l + 1)) *
                          static_cast<std::size_t>(width(l)));
    segs.emplace_back(prefix + ".bias", static_cast<std::size_t>(width(l + 1)));
  }
  return sdafl::MakeLayout(segs);
}

std::string MlpSpec::Describe() const {
  std::string s;
  for (int l = 0; l <= num_layers(); ++l) {
    s += (l ? "-" : "") + std::to_string(width(l));
  }
  s += " ";
  s += ActivationName(hidden_activation);
  s += "/";
  s += ActivationName(output_activation);
  return s;
}

Mlp::Mlp(MlpSpec spec, ParamVector params) : spec_(std::move(spec)) {
  if (spec_.input_dim <= 0 || spec_.output_dim <= 0) {
    throw InvalidArgument("MLP input and output widths must be positive");
  }
  for (int h : spec_.hidden) {
    if (h <= 0) throw InvalidArgument("MLP hidden widths must be positive");
  }
  const Layout layout = spec_.MakeLayout();
  for (std::size_t i = 0; i < layout.size(); i += 2) {
    weight_offset_.push_back(layout[i].offset);
    bias_offset_.push_back(layout[i + 1].offset);
  }
  set_params(std::move(params));
}

Mlp Mlp::Initialized(const MlpSpec& spec, uint64_t seed) {
  ParamVector p(spec.MakeLayout());
  Rng rng = Rng::Named(seed, "mlp_init");
  for (int l = 0; l < spec.num_layers(); ++l) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(spec.width(l) + spec.width(l + 1)));
    auto w = p.MutableSegmentValues("fc" + std::to_string(l) + ".weight");
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w[i] = (2.0 * rng.Uniform() - 1.0) * limit;
    }
  }
  return Mlp(spec, std::move(p));
}

void Mlp::set_params(ParamVector params) {
  params.RequireLayout(spec_.MakeLayout(), "MLP " + spec_.Describe());
  params_ = std::move(params);
}

Eigen::Map<const Matrix> Mlp::Weight(int layer) const {
  return {params_.values().data() + weight_offset_[static_cast<std::size_t>(layer)],
          spec_.width(layer + 1), spec_.width(layer)};
}

Eigen::Map<const Vector> Mlp::Bias(int layer) const {
  return {params_.values().data() + bias_offset_[static_cast<std::size_t>(layer)],
          spec_.width(layer + 1)};
}

Matrix Mlp::Activate(const Matrix& pre, Activation a) const {
  switch (a) {
    case Activation::kIdentity:
      return pre;
    case Activation::kRelu:
      return pre.cwiseMax(0.0);
    case Activation::kLeakyRelu: {
      const double s = spec_.leaky_slope;
      return pre.unaryExpr([s](double v) { return v > 0 ? v : s * v; });
    }
    case Activation::kSigmoid:
      return pre.unaryExpr([](double v) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
      });
    case Activation::kTanh:
      return pre.array().tanh().matrix();
  }
  return pre;
}

Matrix Mlp::Derivative(const Matrix& pre, const Matrix& post,
                       Activation a) const {
  switch (a) {
    case Activation::kIdentity:
      return Matrix::Ones(pre.rows(), pre.cols());
    case Activation::kRelu:
      return pre.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    case Activation::kLeakyRelu: {
      const double s = spec_.leaky_slope;
      return pre.unaryExpr([s](double v) { return v > 0 ? 1.0 : s; });
    }
    case Activation::kSigmoid:
      return (post.array() * (1.0 - post.array())).matrix();
    case Activation::kTanh:
      return (1.0 - post.array().square()).matrix();
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

Matrix Mlp::HiddenDerivative(const Matrix& pre, const Matrix& post) const {
  return Derivative(pre, post, spec_.hidden_activation);
}

Matrix Mlp::Forward(const Matrix& x, MlpCache* cache) const {
  if (x.cols() != spec_.input_dim) {
    throw InvalidArgument("MLP expects " + std::to_string(spec_.input_dim) +
                          " features, got " + std::to_string(x.cols()));
  }
  if (cache) {
    cache->pre.clear();
    cache->post.clear();
    cache->post.push_back(x);
  }
  Matrix h = x;
  for (int l = 0; l < spec_.num_layers(); ++l) {
    Matrix pre = h * Weight(l).transpose();
    pre.rowwise() += Bias(l).transpose();
    const Activation a = l + 1 == spec_.num_layers() ? spec_.output_activation
                                                     : spec_.hidden_activation;
    h = Activate(pre, a);
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->post.push_back(h);
    }
  }
  return h;
}

void Mlp::Backward(const MlpCache& cache, const Matrix& d_out,
                   ParamVector* grad, Matrix* d_input) const {
  const int layers = spec_.num_layers();
  if (static_cast<int>(cache.pre.size()) != layers) {
    throw InvalidArgument("backward called without a matching forward cache");
  }
  if (grad && grad->size() != params_.size()) {
    throw InvalidArgument("gradient buffer layout mismatch");
  }
  Matrix delta = d_out.cwiseProduct(
      Derivative(cache.pre.back(), cache.post.back(), spec_.output_activation));
  for (int l = layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    if (grad) {
      Eigen::Map<Matrix> dw(grad->mutable_values().data() + weight_offset_[ul],
                            spec_.width(l + 1), spec_.width(l));
      Eigen::Map<Vector> db(grad->mutable_values().data() + bias_offset_[ul],
                            spec_.width(l + 1));
      dw.noalias() += delta.transpose() * cache.post[ul];
      db += delta.colwise().sum().transpose();
    }
    if (l == 0 && !d_input) break;
    Matrix d_post = delta * Weight(l);
    if (l == 0) {
      *d_input = std::move(d_post);
      break;
    }
    delta = d_post.cwiseProduct(
        Derivative(cache.pre[ul - 1], cache.post[ul], spec_.hidden_activation));
  }
}

Matrix Mlp::Penultimate(const Matrix& x) const {
  MlpCache cache;
  Forward(x, &cache);
  return cache.post[cache.post.size() - 2];
}

}  // namespace sdafl
