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

#include "sdafl/synthetic_store.h"

#include <fstream>
#include <string>

#include "binary_io.h"
#include "sdafl/errors.h"
#include "sdafl/rng.h"

namespace sdafl::fedcore {
namespace {

using internal::ReadLe;
using internal::WriteLe;

constexpr char kStoreMagic[8] = {'S', 'D', 'A', 'F', 'L', 'S', 'T', '1'};
constexpr char kRecordsMagic[8] = {'S', 'D', 'A', 'F', 'L', 'R', 'C', '1'};
constexpr int32_t kNone = -1;

void WriteRecord(std::ostream& out, const SyntheticRecord& r) {
  WriteLe<int32_t>(out, r.source_client);
  WriteLe<int32_t>(out, r.pseudo_label.value_or(kNone));
  WriteLe<double>(out, r.confidence);
  WriteLe<int32_t>(out, r.labeled_in_round.value_or(kNone));
  WriteLe<uint8_t>(out, r.conditioned ? 1 : 0);
}

SyntheticRecord ReadRecord(std::istream& in) {
  SyntheticRecord r;
  r.source_client = ReadLe<int32_t>(in);
  const auto label = ReadLe<int32_t>(in);
  if (label != kNone) r.pseudo_label = label;
  r.confidence = ReadLe<double>(in);
  const auto stamp = ReadLe<int32_t>(in);
  if (stamp != kNone) r.labeled_in_round = stamp;
  r.conditioned = ReadLe<uint8_t>(in) != 0;
  return r;
}

void ExpectMagic(std::istream& in, const char (&magic)[8], const char* what) {
  char got[8];
  if (!in.read(got, 8) || std::memcmp(got, magic, 8) != 0) {
    throw IoError(std::string("not a ") + what + " file (bad magic)");
  }
}

}  // namespace

std::size_t SyntheticStore::LabeledCount() const {
  std::size_t n = 0;
  for (const SyntheticRecord& r : records) n += r.pseudo_label.has_value();
  return n;
}

std::vector<std::size_t> SyntheticStore::LabeledIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].pseudo_label) out.push_back(i);
  }
  return out;
}

void SyntheticStore::Validate(double threshold) const {
  if (static_cast<std::size_t>(samples.rows()) != records.size()) {
    throw InvalidArgument("store samples and records differ in length");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SyntheticRecord& r = records[i];
    if (r.source_client < 0 || r.source_client >= num_clients) {
      throw InvalidArgument("record " + std::to_string(i) +
                            " has source client outside [0, K)");
    }
    if (r.confidence < 0.0 || r.confidence > 1.0) {
      throw InvalidArgument("record " + std::to_string(i) +
                            " has confidence outside [0, 1]");
    }
    if (r.pseudo_label.has_value() != (r.confidence > threshold)) {
      throw InvalidArgument("record " + std::to_string(i) +
                            " breaks the label/threshold invariant");
    }
  }
}

SyntheticStore BuildSyntheticStore(const std::vector<dpgan::GanPair>& gans,
                                   int n_per_client, uint64_t seed) {
  if (gans.empty()) throw InvalidArgument("no generators supplied");
  if (n_per_client < 1) throw InvalidArgument("n_per_client must be >= 1");
  SyntheticStore store;
  store.num_clients = static_cast<int>(gans.size());
  std::vector<bool> seen(gans.size(), false);
  const auto n = static_cast<Eigen::Index>(n_per_client);
  const int dim = gans.front().generator.output_dim();
  store.samples.resize(n * static_cast<Eigen::Index>(gans.size()), dim);
  Eigen::Index row = 0;
  for (const dpgan::GanPair& pair : gans) {
    const int k = pair.owner_client;
    if (k < 0 || k >= store.num_clients || seen[static_cast<std::size_t>(k)]) {
      throw InvalidArgument("generators must cover clients 0..K-1 once each");
    }
    seen[static_cast<std::size_t>(k)] = true;
    if (pair.generator.net.params().size() == 0) {
      throw InvalidArgument("missing generator for client " + std::to_string(k));
    }
    if (pair.generator.output_dim() != dim) {
      throw InvalidArgument("generators disagree on output width");
    }
    const uint64_t client_seed =
        DeriveSeed(seed, "build_synthetic_store", {static_cast<uint64_t>(k)});
    if (pair.generator.condition_classes == 0) {
      store.samples.middleRows(row, n) =
          dpgan::Sample(pair.generator, n_per_client, client_seed);
      for (int i = 0; i < n_per_client; ++i) {
        SyntheticRecord r;
        r.source_client = k;
        store.records.push_back(r);
      }
      row += n;
      continue;
    }
    if (pair.classes.empty()) {
      throw InvalidArgument("conditional generator without training classes");
    }
    const auto num = static_cast<int>(pair.classes.size());
    for (int j = 0; j < num; ++j) {
      const int count = n_per_client / num + (j < n_per_client % num ? 1 : 0);
      if (count == 0) continue;
      const int cls = pair.classes[static_cast<std::size_t>(j)];
      dpgan::LabeledSamples s =
          dpgan::SampleConditional(pair.generator, count, cls, client_seed);
      store.samples.middleRows(row, count) = s.examples;
      row += count;
      for (int i = 0; i < count; ++i) {
        SyntheticRecord r;
        r.source_client = k;
        r.pseudo_label = cls;
        r.confidence = 1.0;
        r.conditioned = true;
        store.records.push_back(r);
      }
    }
  }
  return store;
}

std::optional<PseudoLabel> PseudoLabelFromProbs(const RowVector& probs,
                                                double tau) {
  if (!(tau > 0 && tau < 1)) throw InvalidArgument("tau must be in (0,1)");
  if (probs.size() == 0) return std::nullopt;
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  if (probs[best] > tau) {
    return PseudoLabel{static_cast<int>(best), probs[best]};
  }
  return std::nullopt;
}

std::optional<PseudoLabel> PseudoLabelOne(const models::ClassifierModel& model,
                                          const RowVector& x, double tau) {
  const Matrix probs = model.PredictProba(Matrix(x));
  return PseudoLabelFromProbs(probs.row(0), tau);
}

RelabelStats UpdatePseudoLabels(
    SyntheticStore& store,
    const std::map<int, const models::ClassifierModel*>& local_models,
    double tau, int round) {
  if (!(tau > 0 && tau < 1)) throw InvalidArgument("tau must be in (0,1)");
  RelabelStats stats;
  std::map<int, std::vector<std::size_t>> by_client;
  for (std::size_t i = 0; i < store.records.size(); ++i) {
    if (!store.records[i].conditioned) {
      by_client[store.records[i].source_client].push_back(i);
    }
  }
  for (const auto& [client, indices] : by_client) {
    const auto it = local_models.find(client);
    if (it == local_models.end() || it->second == nullptr) continue;
    const Matrix probs =
        it->second->PredictProba(data::GatherRows(store.samples, indices));
    for (std::size_t j = 0; j < indices.size(); ++j) {
      SyntheticRecord& r = store.records[indices[j]];
      const RowVector row = probs.row(static_cast<Eigen::Index>(j));
      const std::optional<PseudoLabel> pl = PseudoLabelFromProbs(row, tau);
      const std::optional<int> before = r.pseudo_label;
      r.confidence = row.maxCoeff();
      if (pl) {
        r.pseudo_label = pl->cls;
        ++stats.labeled;
      } else {
        r.pseudo_label.reset();
        if (before) ++stats.revoked;
      }
      if (r.pseudo_label != before) {
        r.labeled_in_round = round;
        ++stats.changed;
      }
      ++stats.evaluated;
    }
  }
  return stats;
}

void WriteStore(std::ostream& out, const SyntheticStore& store) {
  out.write(kStoreMagic, 8);
  WriteLe<int32_t>(out, store.num_clients);
  WriteLe<uint64_t>(out, static_cast<uint64_t>(store.samples.rows()));
  WriteLe<uint64_t>(out, static_cast<uint64_t>(store.samples.cols()));
  for (Eigen::Index i = 0; i < store.samples.size(); ++i) {
    WriteLe<double>(out, store.samples.data()[i]);
  }
  WriteStoreRecords(out, store);
}

SyntheticStore ReadStore(std::istream& in) {
  ExpectMagic(in, kStoreMagic, "synthetic store");
  SyntheticStore store;
  store.num_clients = ReadLe<int32_t>(in);
  const auto rows = ReadLe<uint64_t>(in);
  const auto cols = ReadLe<uint64_t>(in);
  if (rows * cols > (uint64_t{1} << 32)) throw IoError("corrupt store header");
  store.samples.resize(static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < store.samples.size(); ++i) {
    store.samples.data()[i] = ReadLe<double>(in);
  }
  ReadStoreRecords(in, store);
  return store;
}

void SaveStore(const std::filesystem::path& path, const SyntheticStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write store " + path.string());
  WriteStore(out, store);
}

SyntheticStore LoadStore(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open store " + path.string());
  return ReadStore(in);
}

void WriteStoreRecords(std::ostream& out, const SyntheticStore& store) {
  out.write(kRecordsMagic, 8);
  WriteLe<uint64_t>(out, store.records.size());
  for (const SyntheticRecord& r : store.records) WriteRecord(out, r);
  if (!out) throw IoError("failed writing store records");
}

void ReadStoreRecords(std::istream& in, SyntheticStore& store) {
  ExpectMagic(in, kRecordsMagic, "store records");
  const auto n = ReadLe<uint64_t>(in);
  if (store.samples.rows() != 0 &&
      n != static_cast<uint64_t>(store.samples.rows())) {
    throw IoError("store records do not match sample count");
  }
  store.records.clear();
  store.records.reserve(n);
  for (uint64_t i = 0; i < n; ++i) store.records.push_back(ReadRecord(in));
}

}  // namespace sdafl::fedcore
