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

#ifndef SDAFL_RUN_DIR_H_
#define SDAFL_RUN_DIR_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdafl/config.h"
#include "sdafl/round_loop.h"

namespace sdafl::harness {

// Library version recorded in manifests.
std::string_view CodeVersion();

struct RunManifest {
  std::string run_id;
  // SerializeConfig output; replaying it reproduces the run.
  std::string config_text;
  std::string dataset_id;
  uint64_t content_hash = 0;
  std::string code_version;
  uint64_t seed = 0;
  // When per-round accuracy is measured relative to the server update.
  std::string accuracy_measured = "after_server_update";
};

void WriteManifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest ReadManifest(const std::filesystem::path& path);

// Accepts a flat config file or a manifest.json.
ExperimentConfig LoadConfigOrManifest(const std::filesystem::path& path);

// One JSON object per round, without a trailing newline. Doubles round-trip
// exactly.
std::string RoundLogJson(const fedcore::RoundLog& log,
                         bool include_wall_clock = true);
fedcore::RoundLog ParseRoundLog(std::string_view line);
// Reads every complete line; a trailing line without a newline is ignored.
std::vector<fedcore::RoundLog> ReadRoundLogs(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir;
  int threads = 0;
  // Continue the run in out_dir from its last complete round.
  bool resume = false;
};

struct RunResult {
  RunManifest manifest;
  // Every round of the run, including rounds completed before a resume.
  std::vector<fedcore::RoundLog> logs;
  fedcore::ExperimentState final_state;
  std::optional<double> frechet_proxy;
};

// Runs an experiment into a directory:
//   manifest.json, config.txt, partition.txt, rounds.jsonl (flushed each
//   round), state/round_NNNN.{model.ckpt,records.bin}, final_model.ckpt,
//   store.bin, metrics.csv, summary.json.
// Algorithms that use the synthetic store load GANs from config.gan_dir and
// fail before round 0 when they are missing.
RunResult ExecuteRun(const ExperimentConfig& config, const RunOptions& options);

}  // namespace sdafl::harness

#endif  // SDAFL_RUN_DIR_H_
