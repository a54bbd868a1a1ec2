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

#ifndef SDAFL_DATA_H_
#define SDAFL_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sdafl/tensor.h"

namespace sdafl::data {

// Examples (one flattened example per row, values in [0, 1]) with integer
// class labels in [0, num_classes).
struct LabeledDataset {
  Matrix examples;
  std::vector<int> labels;
  int num_classes = 0;
  // Per-example shape, e.g. {28, 28}. Its product equals examples.cols().
  std::vector<int> feature_shape;

  std::size_t size() const { return labels.size(); }
  int feature_dim() const { return static_cast<int>(examples.cols()); }

  // Throws InvalidArgument when any invariant is broken.
  void Validate() const;

  // Rows selected by `indices`, in that order.
  LabeledDataset Subset(const std::vector<std::size_t>& indices) const;
  Matrix OneHotLabels() const;
};

// Rows selected by `indices`, in that order.
Matrix GatherRows(const Matrix& m, const std::vector<std::size_t>& indices);
Matrix OneHot(const std::vector<int>& labels, int num_classes);

enum class DatasetFormat { kIdx, kCsv };

// Accepts "idx" or "csv"; throws InvalidArgument otherwise.
DatasetFormat ParseDatasetFormat(std::string_view tag);

struct LoadOptions {
  // 0 infers max(label) + 1; otherwise labels must lie below it.
  int num_classes = 0;
  // CSV only: when any feature exceeds 1, every feature is divided by this.
  double pixel_max = 255.0;
  // IDX only: label file. Empty derives it from the image file name by
  // replacing "images" with "labels" and "idx3" with "idx1".
  std::filesystem::path labels_path;
};

// CSV: header `f0,...,fD,label`, one example per line.
// IDX: big-endian unsigned-byte image file plus a matching label file.
LabeledDataset LoadDataset(const std::filesystem::path& path,
                           DatasetFormat format,
                           const LoadOptions& options = {});

void SaveCsv(const LabeledDataset& ds, const std::filesystem::path& path);
// Quantizes features to bytes (round(255 * x)).
void SaveIdx(const LabeledDataset& ds, const std::filesystem::path& images,
             const std::filesystem::path& labels);

// FNV-1a over the feature bytes and labels; identifies dataset content in
// run manifests.
uint64_t ContentHash(const LabeledDataset& ds);

struct PartitionSpec {
  int num_clients = 10;
  int classes_per_client = 1;
  uint64_t seed = 0;
};

struct ClientData {
  int client_id = 0;
  LabeledDataset labeled;
  // Present in semi-supervised mode.
  std::optional<Matrix> unlabeled;
  // Shards dealt to this client, in dealing order.
  std::vector<int> shard_ids;
  // Row indices into the partitioned dataset, aligned with `labeled` rows
  // followed by `unlabeled` rows.
  std::vector<std::size_t> source_indices;

  std::vector<int> DistinctClasses() const;
  // Per-class counts of the labeled part.
  std::vector<std::size_t> ClassCounts() const;
  std::size_t TotalExamples() const;
};

// Splits `ds` by class into K*C single-class shards, shuffles the shards and
// deals C to each client. Shards of one class differ in size by at most one.
// Throws InvalidArgument when `spec` is infeasible.
std::vector<ClientData> PartitionNonIid(const LabeledDataset& ds,
                                        const PartitionSpec& spec);

// Keeps `labeled_count` labeled examples (class-stratified) and moves the rest
// into the unlabeled pool with their labels dropped.
ClientData SplitSemiSupervised(const ClientData& cd, std::size_t labeled_count,
                               uint64_t seed);

// One line per client: `client_id=<k> shards=<a,b> counts=<class:n,...>`.
void WritePartitionManifest(std::ostream& os,
                            const std::vector<ClientData>& clients);

// Concatenation of all clients' labeled data.
LabeledDataset MergeLabeled(const std::vector<ClientData>& clients);

}  // namespace sdafl::data

#endif  // SDAFL_DATA_H_
