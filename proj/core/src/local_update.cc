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

#include "sdafl/local_update.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <glog/logging.h>

#include "sdafl/errors.h"

namespace sdafl::fedcore {
namespace {

using models::ClassifierModel;

// Walks a reshuffled permutation of [0, n), reshuffling at every epoch end.
class BatchCursor {
 public:
  BatchCursor(std::size_t n, Rng rng) : n_(n), rng_(std::move(rng)) {}

  std::vector<std::size_t> Next(std::size_t batch) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (pos_ == order_.size()) {
        order_ = rng_.Permutation(n_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

Rng Stream(const StepContext& ctx, std::string_view name) {
  return Rng::Named(ctx.seed, name,
                    {static_cast<uint64_t>(ctx.round),
                     static_cast<uint64_t>(ctx.client)});
}

struct SynthBatch {
  Matrix x;
  Matrix y;
};

SynthBatch DrawSynthetic(const ConfidentPool& pool, std::size_t b,
                         int num_classes, Rng& rng) {
  SynthBatch out;
  out.x.resize(static_cast<Eigen::Index>(b), pool.store->samples.cols());
  out.y = Matrix::Zero(static_cast<Eigen::Index>(b), num_classes);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = rng.Index(pool.size());
    const auto row = static_cast<Eigen::Index>(i);
    out.x.row(row) =
        pool.store->samples.row(static_cast<Eigen::Index>(pool.indices[j]));
    out.y(row, pool.labels[j]) = 1.0;
  }
  return out;
}

std::vector<int> Labels(const data::LabeledDataset& ds,
                        const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ds.labels[i]);
  return out;
}

void Step(ClassifierModel& model, const ParamVector& g, double eta) {
  ParamVector p = model.params();
  models::SgdStepInPlace(p, g, eta);
  model.set_params(std::move(p));
}

void RequireNonEmpty(const data::ClientData& client) {
  if (client.labeled.size() == 0) {
    throw InvalidArgument("client " + std::to_string(client.client_id) +
                          " has no labeled examples");
  }
}

std::size_t RealBatchSize(const FLConfig& cfg, std::size_t n) {
  return std::min(static_cast<std::size_t>(cfg.batch_size), n);
}

UpdateResult Finish(ParamVector w, double loss_sum, int steps) {
  UpdateResult r;
  r.params = std::move(w);
  r.steps = steps;
  r.mean_loss = steps > 0 ? loss_sum / steps : 0.0;
  return r;
}

// Shared body of FedAvg and FedProx.
UpdateResult PlainSgd(const ClassifierModel& global,
                      const data::ClientData& client, const FLConfig& cfg,
                      const StepContext& ctx, double mu) {
  RequireNonEmpty(client);
  ClassifierModel model = global;
  const ParamVector& anchor = global.params();
  BatchCursor cursor(client.labeled.size(), Stream(ctx, "client_batches"));
  const std::size_t b = RealBatchSize(cfg, client.labeled.size());
  double loss_sum = 0;
  for (int e = 0; e < cfg.local_steps; ++e) {
    const std::vector<std::size_t> idx = cursor.Next(b);
    const Matrix x = data::GatherRows(client.labeled.examples, idx);
    const Matrix y =
        data::OneHot(Labels(client.labeled, idx), client.labeled.num_classes);
    ParamVector g = model.params().ZerosLike();
    double loss = model.SoftTargetLoss(x, y, 1.0, &g);
    if (mu > 0) {
      const Vector diff = model.params().values() - anchor.values();
      loss += 0.5 * mu * diff.squaredNorm();
      g.mutable_values() += mu * diff;
    }
    Step(model, g, cfg.learning_rate);
    loss_sum += loss;
  }
  return Finish(model.params(), loss_sum, cfg.local_steps);
}

}  // namespace

std::string_view AlgorithmName(Algorithm a) {
  switch (a) {
    case Algorithm::kSdafl: return "sdafl";
    case Algorithm::kFedAvg: return "fedavg";
    case Algorithm::kFedProx: return "fedprox";
    case Algorithm::kNaiveMix: return "naivemix";
    case Algorithm::kFedMix: return "fedmix";
    case Algorithm::kSdaflSemi: return "sdafl_semi";
    case Algorithm::kLocalFixMatch: return "local_fixmatch";
  }
  return "unknown";
}

Algorithm ParseAlgorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kSdafl, Algorithm::kFedAvg, Algorithm::kFedProx,
                      Algorithm::kNaiveMix, Algorithm::kFedMix,
                      Algorithm::kSdaflSemi, Algorithm::kLocalFixMatch}) {
    if (AlgorithmName(a) == name) return a;
  }
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "'");
}

bool UsesSyntheticStore(Algorithm a) {
  return a == Algorithm::kSdafl || a == Algorithm::kSdaflSemi;
}

bool IsSemiSupervised(Algorithm a) {
  return a == Algorithm::kSdaflSemi || a == Algorithm::kLocalFixMatch;
}

void FLConfig::Validate() const {
  auto require = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw InvalidArgument(std::string(key) + ": " + what);
  };
  require(rounds >= 0, "rounds", "must be >= 0");
  require(clients >= 1, "clients", "must be >= 1");
  require(participation > 0 && participation <= 1, "participation",
          "must be in (0, 1]");
  require(local_steps >= 0, "local_steps", "must be >= 0");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(learning_rate >= 0 && std::isfinite(learning_rate), "learning_rate",
          "must be finite and >= 0");
  require(threshold > 0 && threshold < 1, "threshold", "must be in (0, 1)");
  require(mixup_alpha > 0 && mixup_alpha <= 1, "mixup_alpha",
          "must be in (0, 1]");
  require(lambda2 >= 0, "lambda2", "must be >= 0");
  require(prox_mu >= 0, "prox_mu", "must be >= 0");
  require(server_steps >= 0, "server_steps", "must be >= 0");
  require(synthetic_per_client >= 1, "synthetic_per_client", "must be >= 1");
  require(pseudo_label_rounds >= 0, "pseudo_label_rounds", "must be >= 0");
  require(labeled_batch >= 1, "labeled_batch", "must be >= 1");
  require(unlabeled_batch >= 0, "unlabeled_batch", "must be >= 0");
  require(mix_weight >= 0 && mix_weight <= 1, "mix_weight", "must be in [0, 1]");
  require(mix_mean_size >= 1, "mix_mean_size", "must be >= 1");
  require(hidden_width >= 1, "hidden_width", "must be >= 1");
}

MixedBatch MixupBatch(const Matrix& x_real, const Matrix& y_real,
                      const Matrix& x_synth, const Matrix& y_synth,
                      double lambda) {
  if (x_real.rows() != x_synth.rows() || x_real.cols() != x_synth.cols() ||
      y_real.rows() != y_synth.rows() || y_real.cols() != y_synth.cols() ||
      x_real.rows() != y_real.rows()) {
    throw InvalidArgument("mixup batches differ in shape");
  }
  if (!(lambda >= 0 && lambda <= 1)) {
    throw InvalidArgument("mixup weight must be in [0,1]");
  }
  return {lambda * x_synth + (1.0 - lambda) * x_real,
          lambda * y_synth + (1.0 - lambda) * y_real};
}

double LossSdafl(const ClassifierModel& model, const Matrix& x_real,
                 const Matrix& y_real, const Matrix& x_synth,
                 const Matrix& y_synth, double lambda1, double lambda2,
                 ParamVector* grad) {
  const MixedBatch mixed = MixupBatch(x_real, y_real, x_synth, y_synth, lambda1);
  // CE is linear in its targets, so l1 is CE against the mixed labels.
  double loss = model.SoftTargetLoss(mixed.x, mixed.y, 1.0, grad);
  if (lambda2 != 0.0) loss += model.SoftTargetLoss(x_real, y_real, lambda2, grad);
  return loss;
}

ConfidentPool ConfidentPool::FromStore(const SyntheticStore& store) {
  ConfidentPool pool;
  pool.store = &store;
  pool.indices = store.LabeledIndices();
  pool.labels.reserve(pool.indices.size());
  for (std::size_t i : pool.indices) {
    pool.labels.push_back(*store.records[i].pseudo_label);
  }
  return pool;
}

MixSource BuildFedMixSource(const std::vector<data::ClientData>& clients,
                            int mean_size) {
  if (mean_size < 1) throw InvalidArgument("mix_mean_size must be >= 1");
  std::vector<RowVector> xs, ys;
  for (const data::ClientData& cd : clients) {
    const Matrix y = cd.labeled.OneHotLabels();
    const auto n = static_cast<Eigen::Index>(cd.labeled.size());
    for (Eigen::Index start = 0; start < n; start += mean_size) {
      const Eigen::Index len = std::min<Eigen::Index>(mean_size, n - start);
      xs.push_back(cd.labeled.examples.middleRows(start, len).colwise().mean());
      ys.push_back(y.middleRows(start, len).colwise().mean());
    }
  }
  if (xs.empty()) throw InvalidArgument("no client data for the mix source");
  MixSource src;
  src.x.resize(static_cast<Eigen::Index>(xs.size()), xs.front().size());
  src.y.resize(static_cast<Eigen::Index>(ys.size()), ys.front().size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    src.x.row(static_cast<Eigen::Index>(i)) = xs[i];
    src.y.row(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return src;
}

MixSource BuildNaiveMixSource(const std::vector<data::ClientData>& clients,
                              int count, uint64_t seed) {
  if (count < 1) throw InvalidArgument("mix source count must be >= 1");
  std::vector<std::size_t> nonempty;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    if (clients[k].labeled.size() > 0) nonempty.push_back(k);
  }
  if (nonempty.empty()) throw InvalidArgument("no client data for the mix source");
  Rng rng = Rng::Named(seed, "naive_mix_source");
  const data::LabeledDataset& first = clients[nonempty.front()].labeled;
  MixSource src;
  src.x.resize(count, first.feature_dim());
  src.y = Matrix::Zero(count, first.num_classes);
  for (int i = 0; i < count; ++i) {
    const std::size_t a = nonempty[rng.Index(nonempty.size())];
    std::size_t b = a;
    if (nonempty.size() > 1) {
      while (b == a) b = nonempty[rng.Index(nonempty.size())];
    }
    const data::LabeledDataset& da = clients[a].labeled;
    const data::LabeledDataset& db = clients[b].labeled;
    const std::size_t ia = rng.Index(da.size()), ib = rng.Index(db.size());
    src.x.row(i) = 0.5 * (da.examples.row(static_cast<Eigen::Index>(ia)) +
                          db.examples.row(static_cast<Eigen::Index>(ib)));
    src.y(i, da.labels[ia]) += 0.5;
    src.y(i, db.labels[ib]) += 0.5;
  }
  return src;
}

UpdateResult LocalUpdateSdafl(const ClassifierModel& global,
                              const data::ClientData& client,
                              const ConfidentPool& pool, const FLConfig& cfg,
                              const StepContext& ctx) {
  RequireNonEmpty(client);
  ClassifierModel model = global;
  BatchCursor cursor(client.labeled.size(), Stream(ctx, "client_batches"));
  Rng synth_rng = Stream(ctx, "client_synthetic");
  Rng mix_rng = Stream(ctx, "client_mixup");
  const std::size_t b = RealBatchSize(cfg, client.labeled.size());
  const int classes = client.labeled.num_classes;
  double loss_sum = 0;
  for (int e = 0; e < cfg.local_steps; ++e) {
    const std::vector<std::size_t> idx = cursor.Next(b);
    const Matrix x = data::GatherRows(client.labeled.examples, idx);
    const Matrix y = data::OneHot(Labels(client.labeled, idx), classes);
    ParamVector g = model.params().ZerosLike();
    double loss;
    if (pool.empty()) {
      // lambda1 = 0 endpoint: l1 collapses to CE on the real batch.
      loss = model.SoftTargetLoss(x, y, 1.0 + cfg.lambda2, &g);
    } else {
      const SynthBatch s = DrawSynthetic(pool, b, classes, synth_rng);
      const double lambda1 = mix_rng.Beta(cfg.mixup_alpha, cfg.mixup_alpha);
      loss = LossSdafl(model, x, y, s.x, s.y, lambda1, cfg.lambda2, &g);
    }
    Step(model, g, cfg.learning_rate);
    loss_sum += loss;
  }
  return Finish(model.params(), loss_sum, cfg.local_steps);
}

UpdateResult LocalUpdateFedAvg(const ClassifierModel& global,
                               const data::ClientData& client,
                               const FLConfig& cfg, const StepContext& ctx) {
  return PlainSgd(global, client, cfg, ctx, 0.0);
}

UpdateResult LocalUpdateFedProx(const ClassifierModel& global,
                                const data::ClientData& client,
                                const FLConfig& cfg, const StepContext& ctx) {
  return PlainSgd(global, client, cfg, ctx, cfg.prox_mu);
}

UpdateResult LocalUpdateMix(const ClassifierModel& global,
                            const data::ClientData& client,
                            const MixSource& source, const FLConfig& cfg,
                            const StepContext& ctx) {
  RequireNonEmpty(client);
  if (source.x.rows() == 0) throw InvalidArgument("empty mix source");
  ClassifierModel model = global;
  BatchCursor cursor(client.labeled.size(), Stream(ctx, "client_batches"));
  Rng src_rng = Stream(ctx, "client_synthetic");
  const std::size_t b = RealBatchSize(cfg, client.labeled.size());
  const int classes = client.labeled.num_classes;
  const double lambda = cfg.mix_weight;
  double loss_sum = 0;
  for (int e = 0; e < cfg.local_steps; ++e) {
    const std::vector<std::size_t> idx = cursor.Next(b);
    const Matrix x = data::GatherRows(client.labeled.examples, idx);
    const Matrix y = data::OneHot(Labels(client.labeled, idx), classes);
    std::vector<std::size_t> sidx(b);
    for (std::size_t& i : sidx) {
      i = src_rng.Index(static_cast<std::size_t>(source.x.rows()));
    }
    const MixedBatch m = MixupBatch(x, y, data::GatherRows(source.x, sidx),
                                    data::GatherRows(source.y, sidx), lambda);
    ParamVector g = model.params().ZerosLike();
    loss_sum += model.SoftTargetLoss(m.x, m.y, 1.0, &g);
    Step(model, g, cfg.learning_rate);
  }
  return Finish(model.params(), loss_sum, cfg.local_steps);
}

UpdateResult LocalUpdateSemi(const ClassifierModel& global,
                             const data::ClientData& client,
                             const ConfidentPool* pool, const FLConfig& cfg,
                             const StepContext& ctx) {
  RequireNonEmpty(client);
  if (!client.unlabeled) {
    throw InvalidArgument("semi-supervised update needs an unlabeled split");
  }
  const Matrix& unlabeled = *client.unlabeled;
  ClassifierModel model = global;
  BatchCursor lab_cursor(client.labeled.size(), Stream(ctx, "client_batches"));
  BatchCursor unl_cursor(static_cast<std::size_t>(unlabeled.rows()),
                         Stream(ctx, "client_unlabeled"));
  Rng synth_rng = Stream(ctx, "client_synthetic");
  Rng mix_rng = Stream(ctx, "client_mixup");
  const std::size_t bl = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.labeled_batch), client.labeled.size());
  const std::size_t bu = std::min<std::size_t>(
      static_cast<std::size_t>(cfg.unlabeled_batch),
      static_cast<std::size_t>(unlabeled.rows()));
  const int classes = client.labeled.num_classes;
  double loss_sum = 0;
  for (int e = 0; e < cfg.local_steps; ++e) {
    const std::vector<std::size_t> idx = lab_cursor.Next(bl);
    const Matrix x = data::GatherRows(client.labeled.examples, idx);
    const Matrix y = data::OneHot(Labels(client.labeled, idx), classes);
    ParamVector g = model.params().ZerosLike();
    double loss = model.SoftTargetLoss(x, y, cfg.lambda2, &g);

    if (bu > 0) {
      const Matrix u = data::GatherRows(unlabeled, unl_cursor.Next(bu));
      const Matrix probs = model.PredictProba(u);
      Matrix targets = Matrix::Zero(u.rows(), classes);
      for (Eigen::Index i = 0; i < u.rows(); ++i) {
        if (auto pl = PseudoLabelFromProbs(probs.row(i), cfg.threshold)) {
          targets(i, pl->cls) = 1.0;
        }
      }
      loss += model.SoftTargetLoss(u, targets, 1.0, &g);
    }

    if (pool != nullptr) {
      if (pool->empty()) {
        loss += model.SoftTargetLoss(x, y, 1.0, &g);
      } else {
        const SynthBatch s = DrawSynthetic(*pool, bl, classes, synth_rng);
        const double lambda1 = mix_rng.Beta(cfg.mixup_alpha, cfg.mixup_alpha);
        const MixedBatch m = MixupBatch(x, y, s.x, s.y, lambda1);
        loss += model.SoftTargetLoss(m.x, m.y, 1.0, &g);
      }
    }
    Step(model, g, cfg.learning_rate);
    loss_sum += loss;
  }
  return Finish(model.params(), loss_sum, cfg.local_steps);
}

UpdateResult ServerUpdate(const ClassifierModel& global,
                          const ConfidentPool& pool, int steps,
                          const FLConfig& cfg, uint64_t seed, int round) {
  if (steps <= 0) return Finish(global.params(), 0.0, 0);
  if (pool.size() < 2) {
    LOG(WARNING) << "round " << round
                 << ": fewer than two labeled synthetic records, skipping "
                    "server update";
    return Finish(global.params(), 0.0, 0);
  }
  ClassifierModel model = global;
  Rng rng = Rng::Named(seed, "server_update", {static_cast<uint64_t>(round)});
  const std::size_t b =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                            pool.size() / 2);
  const int classes = global.num_classes();
  const Eigen::Index cols = pool.store->samples.cols();
  double loss_sum = 0;
  for (int s = 0; s < steps; ++s) {
    // Partial Fisher-Yates: the first 2b positions form two disjoint batches.
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < 2 * b; ++i) {
      std::swap(order[i], order[i + rng.Index(order.size() - i)]);
    }
    Matrix x1(static_cast<Eigen::Index>(b), cols), x2(static_cast<Eigen::Index>(b), cols);
    Matrix y1 = Matrix::Zero(static_cast<Eigen::Index>(b), classes);
    Matrix y2 = Matrix::Zero(static_cast<Eigen::Index>(b), classes);
    for (std::size_t i = 0; i < b; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const std::size_t p1 = order[i], p2 = order[b + i];
      x1.row(r) = pool.store->samples.row(static_cast<Eigen::Index>(pool.indices[p1]));
      x2.row(r) = pool.store->samples.row(static_cast<Eigen::Index>(pool.indices[p2]));
      y1(r, pool.labels[p1]) = 1.0;
      y2(r, pool.labels[p2]) = 1.0;
    }
    const double lambda1 = rng.Beta(cfg.mixup_alpha, cfg.mixup_alpha);
    ParamVector g = model.params().ZerosLike();
    loss_sum += LossSdafl(model, x1, y1, x2, y2, lambda1, cfg.lambda2, &g);
    Step(model, g, cfg.learning_rate);
  }
  return Finish(model.params(), loss_sum, steps);
}

ParamVector Aggregate(const std::vector<ParamVector>& models) {
  if (models.empty()) throw InvalidArgument("cannot aggregate zero models");
  ParamVector out = models.front();
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (!models[i].SameLayout(out)) {
      throw InvalidArgument("aggregate: model " + std::to_string(i) +
                            " has a different layout");
    }
    out.mutable_values() += models[i].values();
  }
  out.mutable_values() /= static_cast<double>(models.size());
  return out;
}

}  // namespace sdafl::fedcore
