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

#include "sdafl/run_dir.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <glog/logging.h>

#include "json.hpp"
#include "sdafl/checkpoint.h"
#include "sdafl/errors.h"
#include "sdafl/experiment.h"
#include "sdafl/metrics.h"
#include "sdafl/synthetic_store.h"

#ifndef SDAFL_VERSION
#define SDAFL_VERSION "unknown"
#endif

namespace sdafl::harness {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

std::string RunId(const ExperimentConfig& config, std::string_view text) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s-s%llu-%08llx",
                std::string(fedcore::AlgorithmName(config.fl.algorithm)).c_str(),
                static_cast<unsigned long long>(config.fl.seed),
                static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

fs::path SnapshotPath(const fs::path& dir, int round, const char* suffix) {
  char name[64];
  std::snprintf(name, sizeof name, "round_%04d.%s", round, suffix);
  return dir / "state" / name;
}

void WriteSnapshot(const fs::path& dir, const fedcore::ExperimentState& state,
                   int round) {
  SaveCheckpoint(SnapshotPath(dir, round, "model.ckpt"), state.global.params());
  if (state.store) {
    std::ofstream out(SnapshotPath(dir, round, "records.bin"), std::ios::binary);
    fedcore::WriteStoreRecords(out, *state.store);
    if (!out) throw IoError("cannot write store records snapshot");
  }
}

void LoadSnapshot(const fs::path& dir, int round,
                  fedcore::ExperimentState& state) {
  const fs::path model = SnapshotPath(dir, round, "model.ckpt");
  if (!fs::exists(model)) {
    throw IoError("resume: missing snapshot " + model.string());
  }
  state.global.set_params(LoadCheckpoint(model));
  if (state.store) {
    std::ifstream in(SnapshotPath(dir, round, "records.bin"), std::ios::binary);
    if (!in) throw IoError("resume: missing store records for round " +
                           std::to_string(round));
    fedcore::ReadStoreRecords(in, *state.store);
  }
  state.next_round = round + 1;
}

}  // namespace

std::string_view CodeVersion() { return SDAFL_VERSION; }

void WriteManifest(const fs::path& path, const RunManifest& m) {
  json j;
  j["run_id"] = m.run_id;
  j["code_version"] = m.code_version;
  j["seed"] = m.seed;
  j["dataset_id"] = m.dataset_id;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(m.content_hash));
  j["content_hash"] = hash;
  j["accuracy_measured"] = m.accuracy_measured;
  j["config"] = m.config_text;
  WriteText(path, j.dump(2) + "\n");
}

RunManifest ReadManifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(ReadText(path));
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.content_hash =
        std::stoull(j.at("content_hash").get<std::string>(), nullptr, 16);
    m.accuracy_measured = j.at("accuracy_measured").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest " + path.string() + ": " + e.what());
  }
}

ExperimentConfig LoadConfigOrManifest(const fs::path& path) {
  if (path.extension() == ".json") {
    return ParseConfig(ReadManifest(path).config_text);
  }
  return LoadConfig(path);
}

std::string RoundLogJson(const fedcore::RoundLog& log,
                         bool include_wall_clock) {
  json j;
  j["round"] = log.round;
  j["accuracy"] = log.accuracy;
  j["accuracy_before_server_update"] = log.accuracy_before_server_update;
  j["mean_local_loss"] = log.mean_local_loss;
  j["labeled_fraction"] = log.labeled_fraction;
  j["mean_confidence"] = log.mean_confidence;
  j["participants"] = log.participants;
  j["client_samples"] = log.client_samples;
  j["server_steps_applied"] = log.server_steps_applied;
  j["pseudo_labels_changed"] = log.pseudo_labels_changed;
  if (include_wall_clock) j["wall_seconds"] = log.wall_seconds;
  return j.dump();
}

fedcore::RoundLog ParseRoundLog(std::string_view line) {
  try {
    const json j = json::parse(line);
    fedcore::RoundLog log;
    log.round = j.at("round").get<int>();
    log.accuracy = j.at("accuracy").get<double>();
    log.accuracy_before_server_update =
        j.at("accuracy_before_server_update").get<double>();
    log.mean_local_loss = j.at("mean_local_loss").get<double>();
    log.labeled_fraction = j.at("labeled_fraction").get<double>();
    log.mean_confidence = j.at("mean_confidence").get<double>();
    log.participants = j.at("participants").get<std::vector<int>>();
    log.client_samples = j.at("client_samples").get<std::vector<std::size_t>>();
    log.server_steps_applied = j.at("server_steps_applied").get<int>();
    log.pseudo_labels_changed = j.at("pseudo_labels_changed").get<std::size_t>();
    log.wall_seconds = j.value("wall_seconds", 0.0);
    return log;
  } catch (const json::exception& e) {
    throw IoError(std::string("corrupt round log: ") + e.what());
  }
}

std::vector<fedcore::RoundLog> ReadRoundLogs(const fs::path& path) {
  const std::string text = ReadText(path);
  std::vector<fedcore::RoundLog> logs;
  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) logs.push_back(ParseRoundLog(line));
    pos = nl + 1;
  }
  return logs;
}

RunResult ExecuteRun(const ExperimentConfig& config, const RunOptions& options) {
  config.Validate();
  const fs::path dir = options.out_dir;
  if (dir.empty()) throw InvalidArgument("output directory not set");
  const fs::path rounds_path = dir / "rounds.jsonl";
  if (!options.resume && fs::exists(rounds_path) &&
      fs::file_size(rounds_path) > 0) {
    throw InvalidArgument(dir.string() +
                          " already holds a run; pass --resume to continue it");
  }

  const PreparedData data = PrepareData(config);
  std::optional<std::vector<dpgan::GanPair>> gans;
  if (fedcore::UsesSyntheticStore(config.fl.algorithm)) {
    if (config.gan_dir.empty()) {
      throw InvalidArgument("gan_dir: required by algorithm " +
                            std::string(fedcore::AlgorithmName(config.fl.algorithm)));
    }
    gans = LoadGans(config.gan_dir, config, data);
  }
  const fedcore::Simulation sim(config.fl,
                                BuildInputs(config, data, gans ? &*gans : nullptr),
                                options.threads);

  RunResult result;
  result.manifest.config_text = SerializeConfig(config);
  result.manifest.run_id = RunId(config, result.manifest.config_text);
  result.manifest.dataset_id = data.dataset_id;
  result.manifest.content_hash = data.content_hash;
  result.manifest.code_version = std::string(CodeVersion());
  result.manifest.seed = config.fl.seed;

  fs::create_directories(dir / "state");
  fedcore::ExperimentState state = sim.InitialState();
  if (options.resume && fs::exists(rounds_path)) {
    const RunManifest previous = ReadManifest(dir / "manifest.json");
    if (previous.config_text != result.manifest.config_text) {
      throw InvalidArgument("resume: config differs from " +
                            (dir / "manifest.json").string());
    }
    result.logs = ReadRoundLogs(rounds_path);
    for (std::size_t i = 0; i < result.logs.size(); ++i) {
      if (result.logs[i].round != static_cast<int>(i)) {
        throw IoError("resume: round log out of sequence at line " +
                      std::to_string(i + 1));
      }
    }
    // Drop any partially written record.
    std::string kept;
    for (const fedcore::RoundLog& log : result.logs) {
      kept += RoundLogJson(log) + "\n";
    }
    WriteText(rounds_path, kept);
    if (!result.logs.empty()) {
      LoadSnapshot(dir, result.logs.back().round, state);
    }
    LOG(INFO) << "resuming " << dir << " at round " << state.next_round;
  } else {
    WriteManifest(dir / "manifest.json", result.manifest);
    WriteText(dir / "config.txt", result.manifest.config_text);
    std::ostringstream partition;
    data::WritePartitionManifest(partition, data.clients);
    WriteText(dir / "partition.txt", partition.str());
    WriteText(rounds_path, "");
  }

  std::ofstream rounds(rounds_path, std::ios::app | std::ios::binary);
  if (!rounds) throw IoError("cannot append to " + rounds_path.string());
  const auto observer = [&](const fedcore::ExperimentState& s,
                            const fedcore::RoundLog& log) {
    WriteSnapshot(dir, s, log.round);
    rounds << RoundLogJson(log) << '\n';
    rounds.flush();
    if (!rounds) throw IoError("cannot append to " + rounds_path.string());
    LOG(INFO) << "round " << log.round << " accuracy " << log.accuracy;
  };
  std::vector<fedcore::RoundLog> fresh = RunExperiment(sim, &state, observer);
  result.logs.insert(result.logs.end(), fresh.begin(), fresh.end());

  SaveCheckpoint(dir / "final_model.ckpt", state.global.params());
  if (state.store) {
    fedcore::SaveStore(dir / "store.bin", *state.store);
    result.frechet_proxy = SyntheticQuality(config, data.train.examples,
                                            state.store->samples, data.test);
  }

  std::vector<metrics::MetricsRow> rows;
  for (const fedcore::RoundLog& log : result.logs) {
    rows.push_back({log.round, log.accuracy, std::nullopt, log.labeled_fraction,
                    log.mean_confidence});
  }
  if (!rows.empty()) rows.back().frechet_proxy = result.frechet_proxy;
  std::ofstream csv(dir / "metrics.csv", std::ios::trunc);
  metrics::WriteMetricsCsv(csv, rows);

  json summary;
  summary["run_id"] = result.manifest.run_id;
  summary["algorithm"] = fedcore::AlgorithmName(config.fl.algorithm);
  summary["rounds"] = result.logs.size();
  summary["final_accuracy"] =
      result.logs.empty() ? metrics::Accuracy(state.global, data.test)
                          : result.logs.back().accuracy;
  summary["frechet_proxy"] =
      result.frechet_proxy ? json(*result.frechet_proxy) : json(nullptr);
  summary["dp_epsilon"] =
      config.dp_enabled ? json(config.dp_epsilon) : json(nullptr);
  WriteText(dir / "summary.json", summary.dump(2) + "\n");

  result.final_state = std::move(state);
  return result;
}

}  // namespace sdafl::harness
