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

#include "sdafl/dpgan.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include <glog/logging.h>

#include "sdafl/errors.h"

namespace sdafl::dpgan {
namespace {

using models::CriticModel;
using models::GeneratorModel;

Matrix NormalMatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Normal();
  return m;
}

// Indices of a batch drawn without replacement.
std::vector<std::size_t> DrawBatch(std::size_t n, int batch, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const auto b = static_cast<std::size_t>(batch);
  for (std::size_t i = 0; i < b; ++i) {
    std::swap(idx[i], idx[i + rng.Index(n - i)]);
  }
  idx.resize(b);
  return idx;
}

Matrix Interpolate(const Matrix& real, const Matrix& fake, Rng& rng) {
  Matrix x_hat(real.rows(), real.cols());
  for (Eigen::Index i = 0; i < real.rows(); ++i) {
    const double u = rng.Uniform();
    x_hat.row(i) = u * real.row(i) + (1.0 - u) * fake.row(i);
  }
  return x_hat;
}

// Unprivatized critic gradient. Every read is charged to the phase that made
// it, so an audit can show generator updates never consume raw gradients.
class SensitiveGradient {
 public:
  enum class Phase { kCritic, kGenerator };

  SensitiveGradient(ParamVector g, TrainStats* stats, const Phase* phase)
      : g_(std::move(g)), stats_(stats), phase_(phase) {}

  const ParamVector& Read() const {
    if (*phase_ == Phase::kCritic) {
      ++stats_->raw_gradient_reads_critic_phase;
    } else {
      ++stats_->raw_gradient_reads_generator_phase;
    }
    return g_;
  }

 private:
  ParamVector g_;
  TrainStats* stats_;
  const Phase* phase_;
};

void CheckFinite(double v, const char* what, int iteration) {
  if (!std::isfinite(v)) {
    throw NonFiniteError(std::string(what) + " became non-finite at iteration " +
                         std::to_string(iteration));
  }
}

struct Trainer {
  const Matrix& data;
  const std::vector<int>* labels;  // conditional variant only
  const GanConfig& config;
  const std::optional<DPConfig>& dp;
  GanPair pair;

  Rng batch_rng;
  Rng noise_rng;
  Rng interp_rng;
  Rng class_rng;
  Rng dp_rng;
  models::AdamState critic_opt;
  models::AdamState gen_opt;
  SensitiveGradient::Phase phase = SensitiveGradient::Phase::kCritic;

  Trainer(const Matrix& d, const std::vector<int>* l, const GanConfig& c,
          const std::optional<DPConfig>& p, int owner)
      : data(d),
        labels(l),
        config(c),
        dp(p),
        batch_rng(Rng::Named(c.seed, "gan_batches", {uint64_t(owner)})),
        noise_rng(Rng::Named(c.seed, "gan_noise", {uint64_t(owner)})),
        interp_rng(Rng::Named(c.seed, "gan_interpolates", {uint64_t(owner)})),
        class_rng(Rng::Named(c.seed, "gan_classes", {uint64_t(owner)})),
        dp_rng(Rng::Named(c.seed, "gan_dp_noise", {uint64_t(owner)})) {
    for (models::AdamState* opt : {&critic_opt, &gen_opt}) {
      opt->learning_rate = c.learning_rate;
      opt->beta1 = c.beta1;
      opt->beta2 = c.beta2;
    }
  }

  int aux() const { return pair.critic.aux_classes; }

  Matrix Conditions(const std::vector<int>& cls) const {
    return data::OneHot(cls, pair.num_classes);
  }

  std::vector<int> DrawClasses(int n) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      out.push_back(pair.classes[class_rng.Index(pair.classes.size())]);
    }
    return out;
  }

  Matrix Fake(int n, std::vector<int>* fake_labels, MlpCache* cache) {
    const Matrix z = NormalMatrix(n, config.noise_dim, noise_rng);
    if (aux() == 0) return pair.generator.Generate(z, nullptr, cache);
    *fake_labels = DrawClasses(n);
    const Matrix cond = Conditions(*fake_labels);
    return pair.generator.Generate(z, &cond, cache);
  }

  ParamVector PerExamplePrivatized(const CriticBatch& batch) {
    const DPConfig& p = *dp;
    ParamVector sum = pair.critic.net.params().ZerosLike();
    for (Eigen::Index i = 0; i < batch.real.rows(); ++i) {
      std::vector<int> rl, fl;
      CriticBatch one{batch.real.row(i), batch.fake.row(i), batch.x_hat.row(i),
                      nullptr, nullptr};
      if (batch.real_labels) {
        rl = {(*batch.real_labels)[static_cast<std::size_t>(i)]};
        fl = {(*batch.fake_labels)[static_cast<std::size_t>(i)]};
        one.real_labels = &rl;
        one.fake_labels = &fl;
      }
      ParamVector g = sum.ZerosLike();
      CriticLoss(pair.critic, one, config.gp_weight, config.aux_weight, &g);
      const SensitiveGradient raw(std::move(g), &pair.stats, &phase);
      sum.mutable_values() += ClipToNorm(raw.Read(), p.clip_bound).values();
    }
    for (Eigen::Index j = 0; j < sum.mutable_values().size(); ++j) {
      sum.mutable_values()[j] += dp_rng.Normal(0.0, p.sigma * p.clip_bound);
    }
    sum.mutable_values() /= static_cast<double>(batch.real.rows());
    return sum;
  }

  void CriticStep(int iteration) {
    phase = SensitiveGradient::Phase::kCritic;
    const std::vector<std::size_t> idx =
        DrawBatch(static_cast<std::size_t>(data.rows()), config.batch_size,
                  batch_rng);
    CriticBatch batch;
    batch.real = data::GatherRows(data, idx);
    std::vector<int> real_labels, fake_labels;
    batch.fake = Fake(config.batch_size, &fake_labels, nullptr);
    batch.x_hat = Interpolate(batch.real, batch.fake, interp_rng);
    if (aux() > 0) {
      for (std::size_t i : idx) real_labels.push_back((*labels)[i]);
      batch.real_labels = &real_labels;
      batch.fake_labels = &fake_labels;
    }

    ParamVector update;
    if (dp && dp->clip_mode == ClipMode::kPerExample) {
      pair.stats.last_critic_loss = CriticLoss(
          pair.critic, batch, config.gp_weight, config.aux_weight, nullptr);
      update = PerExamplePrivatized(batch);
      ++pair.stats.privatized_critic_updates;
    } else {
      ParamVector g = pair.critic.net.params().ZerosLike();
      pair.stats.last_critic_loss =
          CriticLoss(pair.critic, batch, config.gp_weight, config.aux_weight, &g);
      const SensitiveGradient raw(std::move(g), &pair.stats, &phase);
      if (dp) {
        update = PrivatizeGradients(raw.Read(), dp->clip_bound, dp->sigma,
                                    dp_rng);
        ++pair.stats.privatized_critic_updates;
      } else {
        update = raw.Read();
      }
    }
    CheckFinite(pair.stats.last_critic_loss, "critic loss", iteration);
    if (!update.AllFinite()) {
      throw NonFiniteError("critic gradient became non-finite at iteration " +
                           std::to_string(iteration));
    }
    critic_opt.Step(pair.critic.net.mutable_params(), update);
    ++pair.stats.critic_updates;
  }

  // Reads only the (already privatized) critic parameters and fresh noise.
  void GeneratorStep(int iteration) {
    phase = SensitiveGradient::Phase::kGenerator;
    const int n = config.batch_size;
    MlpCache gen_cache, critic_cache;
    std::vector<int> fake_labels;
    const Matrix fake = Fake(n, &fake_labels, &gen_cache);
    const Matrix out = pair.critic.net.Forward(fake, &critic_cache);
    Matrix d_out = Matrix::Zero(out.rows(), out.cols());
    d_out.col(0).setConstant(-1.0 / n);
    double loss = -out.col(0).mean();
    if (aux() > 0) {
      const Matrix probs = models::Softmax(out.rightCols(aux()));
      const Matrix targets = data::OneHot(fake_labels, aux());
      loss += config.aux_weight * models::CrossEntropy(probs, targets);
      d_out.rightCols(aux()) = (probs - targets) * (config.aux_weight / n);
    }
    CheckFinite(loss, "generator loss", iteration);
    Matrix d_fake;
    pair.critic.net.Backward(critic_cache, d_out, nullptr, &d_fake);
    ParamVector g = pair.generator.net.params().ZerosLike();
    pair.generator.net.Backward(gen_cache, d_fake, &g);
    if (!g.AllFinite()) {
      throw NonFiniteError("generator gradient became non-finite at iteration " +
                           std::to_string(iteration));
    }
    gen_opt.Step(pair.generator.net.mutable_params(), g);
    pair.stats.last_generator_loss = loss;
    ++pair.stats.generator_updates;
  }

  void Run() {
    for (int it = 0; it < config.iterations; ++it) {
      for (int s = 0; s < config.critic_steps; ++s) CriticStep(it);
      GeneratorStep(it);
    }
  }
};

}  // namespace

GanPair InitGanPair(int data_dim, const GanConfig& config,
                    const std::optional<DPConfig>& dp, int owner_client,
                    int aux_classes) {
  GanPair pair;
  pair.config = config;
  pair.dp = dp;
  pair.owner_client = owner_client;
  pair.num_classes = aux_classes;
  pair.generator.noise_dim = config.noise_dim;
  pair.generator.condition_classes = aux_classes;
  pair.generator.net = Mlp::Initialized(
      GeneratorModel::DefaultSpec(config.noise_dim, aux_classes, data_dim,
                                  config.hidden_width),
      DeriveSeed(config.seed, "generator_init", {uint64_t(owner_client)}));
  pair.critic.aux_classes = aux_classes;
  pair.critic.net = Mlp::Initialized(
      CriticModel::DefaultSpec(data_dim, aux_classes, config.hidden_width),
      DeriveSeed(config.seed, "critic_init", {uint64_t(owner_client)}));
  return pair;
}

double DpSigma(double epsilon, double delta, double q, int64_t n_d,
               LogBase base) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive and finite");
  }
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must be in (0,1)");
  if (!(q > 0 && q <= 1)) throw InvalidArgument("q must be in (0,1]");
  if (n_d < 1) throw InvalidArgument("n_d must be a positive integer");
  const double log_inv_delta =
      base == LogBase::kNatural ? -std::log(delta) : -std::log10(delta);
  return 2.0 * q / epsilon *
         std::sqrt(static_cast<double>(n_d) * log_inv_delta);
}

void GanConfig::Validate() const {
  if (iterations < 0) throw InvalidArgument("iterations must be >= 0");
  if (critic_steps < 1) throw InvalidArgument("critic_steps must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(gp_weight >= 0)) throw InvalidArgument("gp_weight must be >= 0");
  if (noise_dim < 1) throw InvalidArgument("noise_dim must be >= 1");
  if (hidden_width < 1) throw InvalidArgument("hidden_width must be >= 1");
  if (!(learning_rate > 0)) throw InvalidArgument("learning_rate must be > 0");
}

DPConfig DPConfig::Derive(double epsilon, double delta, double q, int64_t n_d,
                          double clip_bound, LogBase base) {
  DPConfig c;
  c.epsilon = epsilon;
  c.delta = delta;
  c.q = q;
  c.n_d = n_d;
  c.clip_bound = clip_bound;
  c.log_base = base;
  c.sigma = DpSigma(epsilon, delta, q, n_d, base);
  c.Validate();
  return c;
}

DPConfig DPConfig::ForDataset(double epsilon, double delta,
                              std::size_t dataset_size, int batch_size,
                              double clip_bound) {
  if (dataset_size == 0 || batch_size < 1) {
    throw InvalidArgument("dataset and batch sizes must be positive");
  }
  const auto n = static_cast<double>(dataset_size);
  const double q = std::min(1.0, batch_size / n);
  const auto n_d = static_cast<int64_t>(std::ceil(n / batch_size));
  return Derive(epsilon, delta, q, n_d, clip_bound);
}

void DPConfig::Validate() const {
  DpSigma(epsilon, delta, q, n_d, log_base);
  if (!(clip_bound > 0)) throw InvalidArgument("clip_bound must be positive");
  if (!(sigma >= 0)) throw InvalidArgument("sigma must be nonnegative");
}

PenaltyResult GradientPenaltyAt(const Mlp& critic, const Matrix& x_hat,
                                double gamma, int output_column) {
  const MlpSpec& spec = critic.spec();
  if (!IsPiecewiseLinear(spec.hidden_activation) ||
      spec.output_activation != Activation::kIdentity) {
    throw InvalidArgument(
        "gradient penalty needs piecewise-linear hidden layers and an "
        "identity output");
  }
  if (!(gamma >= 0)) throw InvalidArgument("gamma must be nonnegative");
  if (output_column < 0 || output_column >= spec.output_dim) {
    throw InvalidArgument("penalty output column out of range");
  }
  PenaltyResult result;
  result.grad = critic.params().ZerosLike();
  const Eigen::Index n = x_hat.rows();
  if (n == 0 || gamma == 0.0) return result;

  MlpCache cache;
  critic.Forward(x_hat, &cache);
  const int layers = spec.num_layers();
  std::vector<Matrix> masks;
  for (int l = 0; l + 1 < layers; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    masks.push_back(critic.HiddenDerivative(cache.pre[ul], cache.post[ul + 1]));
  }

  // Input gradient of column `output_column`, keeping every layer's delta.
  std::vector<Matrix> delta(static_cast<std::size_t>(layers));
  delta.back() = Matrix::Zero(n, spec.output_dim);
  delta.back().col(output_column).setOnes();
  Matrix g;
  for (int l = layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    g = delta[ul] * critic.Weight(l);
    if (l > 0) delta[ul - 1] = g.cwiseProduct(masks[ul - 1]);
  }

  const Vector norms = g.rowwise().norm();
  double total = 0;
  Matrix v(n, g.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double excess = norms[i] - 1.0;
    total += excess * excess;
    // d(||g|| - 1)^2 / dg; the subgradient at g = 0 is taken as zero.
    const double scale = norms[i] > 0 ? 2.0 * excess / norms[i] : 0.0;
    v.row(i) = scale * g.row(i);
  }
  result.value = gamma * total / static_cast<double>(n);
  v *= gamma / static_cast<double>(n);

  // Reverse pass over the input-gradient computation. Masks are locally
  // constant, so biases receive no gradient.
  for (int l = 0; l < layers; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    auto dw = result.grad.MutableSegmentValues("fc" + std::to_string(l) +
                                               ".weight");
    Eigen::Map<Matrix> dw_mat(dw.data(), spec.width(l + 1), spec.width(l));
    dw_mat.noalias() += delta[ul].transpose() * v;
    if (l + 1 < layers) {
      v = (v * critic.Weight(l).transpose()).cwiseProduct(masks[ul]);
    }
  }
  return result;
}

PenaltyResult GradientPenalty(const CriticModel& critic, const Matrix& real,
                              const Matrix& fake, double gamma,
                              uint64_t seed) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw InvalidArgument("real and fake batches differ in shape");
  }
  Rng rng = Rng::Named(seed, "gradient_penalty");
  return GradientPenaltyAt(critic.net, Interpolate(real, fake, rng), gamma, 0);
}

double CriticLoss(const CriticModel& critic, const CriticBatch& batch,
                  double gamma, double aux_weight, ParamVector* grad) {
  if (batch.real.rows() != batch.fake.rows() ||
      batch.real.cols() != batch.fake.cols() ||
      batch.x_hat.rows() != batch.real.rows()) {
    throw InvalidArgument("critic batches differ in shape");
  }
  const Eigen::Index n = batch.real.rows();
  const int aux = critic.aux_classes;
  const bool with_aux = aux > 0 && batch.real_labels && batch.fake_labels;
  MlpCache real_cache, fake_cache;
  const Matrix d_real = critic.net.Forward(batch.real, grad ? &real_cache : nullptr);
  const Matrix d_fake = critic.net.Forward(batch.fake, grad ? &fake_cache : nullptr);
  double loss = d_fake.col(0).mean() - d_real.col(0).mean();

  Matrix g_real = Matrix::Zero(n, d_real.cols());
  Matrix g_fake = Matrix::Zero(n, d_fake.cols());
  g_real.col(0).setConstant(-1.0 / static_cast<double>(n));
  g_fake.col(0).setConstant(1.0 / static_cast<double>(n));
  if (with_aux) {
    auto add_aux = [&](const Matrix& out, const std::vector<int>& labels,
                       Matrix& g_out) {
      const Matrix probs = models::Softmax(out.rightCols(aux));
      const Matrix targets = data::OneHot(labels, aux);
      loss += aux_weight * models::CrossEntropy(probs, targets);
      g_out.rightCols(aux) =
          (probs - targets) * (aux_weight / static_cast<double>(n));
    };
    add_aux(d_real, *batch.real_labels, g_real);
    add_aux(d_fake, *batch.fake_labels, g_fake);
  }
  if (grad) {
    critic.net.Backward(real_cache, g_real, grad);
    critic.net.Backward(fake_cache, g_fake, grad);
  }
  if (gamma > 0) {
    PenaltyResult gp = GradientPenaltyAt(critic.net, batch.x_hat, gamma, 0);
    loss += gp.value;
    if (grad) grad->mutable_values() += gp.grad.values();
  }
  return loss;
}

ParamVector ClipToNorm(const ParamVector& g, double clip_bound) {
  if (!(clip_bound > 0)) throw InvalidArgument("clip bound must be positive");
  if (!g.AllFinite()) throw NonFiniteError("cannot clip a non-finite gradient");
  ParamVector out = g;
  const double norm = g.values().norm();
  if (norm > clip_bound) out.mutable_values() *= clip_bound / norm;
  return out;
}

ParamVector PrivatizeGradients(const ParamVector& g, double clip_bound,
                               double sigma, Rng& rng) {
  if (!(sigma >= 0)) throw InvalidArgument("sigma must be nonnegative");
  ParamVector out = ClipToNorm(g, clip_bound);
  if (sigma > 0) {
    const double stddev = sigma * clip_bound;
    for (Eigen::Index i = 0; i < out.mutable_values().size(); ++i) {
      out.mutable_values()[i] += rng.Normal(0.0, stddev);
    }
  }
  return out;
}

GanPair TrainWganGp(const Matrix& data, const GanConfig& config,
                    const std::optional<DPConfig>& dp, int owner_client) {
  config.Validate();
  if (dp) dp->Validate();
  if (config.conditional) {
    throw InvalidArgument("use TrainAcWganGp for conditional training");
  }
  if (data.rows() < config.batch_size) {
    throw InvalidArgument("WGAN-GP needs at least batch_size examples");
  }
  Trainer trainer(data, nullptr, config, dp, owner_client);
  trainer.pair = InitGanPair(static_cast<int>(data.cols()), config, dp,
                          owner_client, 0);
  trainer.Run();
  VLOG(1) << "client " << owner_client << " WGAN-GP done: critic loss "
          << trainer.pair.stats.last_critic_loss;
  return std::move(trainer.pair);
}

GanPair TrainAcWganGp(const data::LabeledDataset& data, const GanConfig& config,
                      const std::optional<DPConfig>& dp, int owner_client) {
  config.Validate();
  if (dp) dp->Validate();
  if (!config.conditional) {
    throw InvalidArgument("AC-WGAN-GP requires config.conditional = true");
  }
  if (data.examples.rows() < config.batch_size) {
    throw InvalidArgument("AC-WGAN-GP needs at least batch_size examples");
  }
  Trainer trainer(data.examples, &data.labels, config, dp, owner_client);
  trainer.pair = InitGanPair(data.feature_dim(), config, dp, owner_client,
                          data.num_classes);
  std::vector<int> classes(data.labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  trainer.pair.classes = classes;
  trainer.Run();
  return std::move(trainer.pair);
}

Matrix Sample(const GeneratorModel& generator, int n, uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample count must be >= 1");
  if (generator.condition_classes > 0) {
    throw InvalidArgument("conditional generators need SampleConditional");
  }
  Rng rng = Rng::Named(seed, "gan_sample");
  return generator.Generate(NormalMatrix(n, generator.noise_dim, rng));
}

LabeledSamples SampleConditional(const GeneratorModel& generator, int n,
                                 int cls, uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample count must be >= 1");
  if (generator.condition_classes == 0) {
    throw InvalidArgument("generator is not conditional");
  }
  if (cls < 0 || cls >= generator.condition_classes) {
    throw InvalidArgument("conditioning class out of range");
  }
  Rng rng = Rng::Named(seed, "gan_sample_conditional",
                       {static_cast<uint64_t>(cls)});
  LabeledSamples out;
  out.labels.assign(static_cast<std::size_t>(n), cls);
  const Matrix cond = data::OneHot(out.labels, generator.condition_classes);
  out.examples =
      generator.Generate(NormalMatrix(n, generator.noise_dim, rng), &cond);
  return out;
}

void WritePrivacyReport(std::ostream& os, const std::vector<GanPair>& pairs) {
  const auto old_precision = os.precision(17);
  for (const GanPair& p : pairs) {
    if (!p.dp) continue;
    os << "client=" << p.owner_client << " epsilon=" << p.dp->epsilon
       << " delta=" << p.dp->delta << " q=" << p.dp->q << " n_d=" << p.dp->n_d
       << " clip_bound=" << p.dp->clip_bound << " sigma_n=" << p.dp->sigma
       << '\n';
  }
  os.precision(old_precision);
}

}  // namespace sdafl::dpgan
