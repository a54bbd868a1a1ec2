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

#ifndef SDAFL_CONFIG_H_
#define SDAFL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sdafl/data.h"
#include "sdafl/dpgan.h"
#include "sdafl/fl_config.h"

namespace sdafl::harness {

// Built-in dataset tags accepted by the `dataset` key.
inline constexpr std::string_view kBuiltinDigits = "builtin:digits8";

enum class FeatureKind { kRaw, kClassifier };

struct DataConfig {
  // A file path or kBuiltinDigits.
  std::string dataset = std::string(kBuiltinDigits);
  data::DatasetFormat dataset_format = data::DatasetFormat::kCsv;
  std::string dataset_labels;
  std::string test_dataset;
  int num_classes = 0;
  double pixel_max = 255.0;
  // Built-in renderer sizes and seed.
  int builtin_per_class = 500;
  int builtin_test_per_class = 100;
  uint64_t data_seed = 0;
  // Labeled examples kept per client in semi-supervised mode.
  int labeled_per_client = 50;
};

// Every knob of an experiment. Keys in the text form mirror field names;
// GAN and DP fields carry `gan_` / `dp_` prefixes.
struct ExperimentConfig {
  fedcore::FLConfig fl;
  int classes_per_client = 1;
  dpgan::GanConfig gan;
  bool dp_enabled = false;
  double dp_epsilon = 5.0;
  double dp_delta = 1e-5;
  double dp_clip_bound = 1.0;
  dpgan::ClipMode dp_clip_mode = dpgan::ClipMode::kMinibatch;
  dpgan::LogBase dp_log_base = dpgan::LogBase::kNatural;
  DataConfig data;
  // Directory with pretrained GAN checkpoints.
  std::string gan_dir;
  FeatureKind frechet_feature = FeatureKind::kClassifier;

  data::PartitionSpec Partition() const;
  // Throws InvalidArgument naming the offending key.
  void Validate() const;
};

// Parses `key = value` lines; `#` starts a comment. Unknown keys, duplicate
// keys and malformed values throw InvalidArgument naming the key. Missing
// keys keep their defaults.
ExperimentConfig ParseConfig(std::string_view text);
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// Canonical text form listing every key; reals use 17 significant digits so
// parsing the output reproduces the config exactly.
std::string SerializeConfig(const ExperimentConfig& config);

// All keys understood by ParseConfig, in canonical order.
std::vector<std::string> ConfigKeys();

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace sdafl::harness

#endif  // SDAFL_CONFIG_H_
