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

#ifndef SDAFL_SYNTHETIC_STORE_H_
#define SDAFL_SYNTHETIC_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "sdafl/dpgan.h"
#include "sdafl/models.h"
#include "sdafl/tensor.h"

namespace sdafl::fedcore {

struct SyntheticRecord {
  int source_client = 0;
  std::optional<int> pseudo_label;
  // Maximum class probability at the last evaluation.
  double confidence = 0.0;
  // Round in which the label state last changed.
  std::optional<int> labeled_in_round;
  // Label came from a conditional generator; never re-evaluated.
  bool conditioned = false;

  bool operator==(const SyntheticRecord&) const = default;
};

// The server's global synthetic dataset. Row i of `samples` belongs to
// records[i].
struct SyntheticStore {
  Matrix samples;
  std::vector<SyntheticRecord> records;
  int num_clients = 0;

  std::size_t size() const { return records.size(); }
  std::size_t LabeledCount() const;
  // Indices of records holding a pseudo label, ascending.
  std::vector<std::size_t> LabeledIndices() const;
  // Throws InvalidArgument when the label/threshold invariant is broken.
  void Validate(double threshold) const;
};

// Samples n_per_client examples from every client's generator. Conditional
// generators spread their samples round-robin over the classes they were
// trained on and arrive labeled with confidence 1.
SyntheticStore BuildSyntheticStore(const std::vector<dpgan::GanPair>& gans,
                                   int n_per_client, uint64_t seed);

struct PseudoLabel {
  int cls = 0;
  double confidence = 0.0;
};

// (argmax, max) when max strictly exceeds tau, lowest index winning ties.
std::optional<PseudoLabel> PseudoLabelFromProbs(const RowVector& probs,
                                                double tau);
std::optional<PseudoLabel> PseudoLabelOne(const models::ClassifierModel& model,
                                          const RowVector& x, double tau);

struct RelabelStats {
  std::size_t evaluated = 0;
  std::size_t labeled = 0;
  std::size_t revoked = 0;
  std::size_t changed = 0;
};

// Re-evaluates every record with its source client's model. Labels are set
// when confidence > tau and revoked otherwise; labeled_in_round is stamped
// with `round` whenever the label state changes. Clients without a model are
// skipped, as are conditioned records.
RelabelStats UpdatePseudoLabels(
    SyntheticStore& store,
    const std::map<int, const models::ClassifierModel*>& local_models,
    double tau, int round);

// Full snapshot (samples and records).
void WriteStore(std::ostream& out, const SyntheticStore& store);
SyntheticStore ReadStore(std::istream& in);
void SaveStore(const std::filesystem::path& path, const SyntheticStore& store);
SyntheticStore LoadStore(const std::filesystem::path& path);

// Records only; samples never change after construction.
void WriteStoreRecords(std::ostream& out, const SyntheticStore& store);
void ReadStoreRecords(std::istream& in, SyntheticStore& store);

}  // namespace sdafl::fedcore

#endif  // SDAFL_SYNTHETIC_STORE_H_
