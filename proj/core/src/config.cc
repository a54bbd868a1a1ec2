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

#include "sdafl/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sdafl/errors.h"

namespace sdafl::harness {
namespace {

using fedcore::Algorithm;

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void Bad(std::string_view key, std::string_view value,
                      std::string_view expected) {
  throw InvalidArgument("config key '" + std::string(key) + "': cannot parse '" +
                        std::string(value) + "' as " + std::string(expected));
}

template <typename T>
T ParseNumber(std::string_view key, std::string_view v, const char* what) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) Bad(key, v, what);
  return out;
}

bool ParseBool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  Bad(key, v, "bool");
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Binding {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename F>
Binding Int(const char* key, F field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return std::to_string(*field(const_cast<ExperimentConfig&>(c)));
          },
          [key, field](ExperimentConfig& c, std::string_view v) {
            *field(c) = ParseNumber<std::remove_reference_t<decltype(*field(c))>>(
                key, v, "integer");
          }};
}

template <typename F>
Binding Real(const char* key, F field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return FormatDouble(*field(const_cast<ExperimentConfig&>(c)));
          },
          [key, field](ExperimentConfig& c, std::string_view v) {
            const double d = ParseNumber<double>(key, v, "real");
            if (!std::isfinite(d)) Bad(key, v, "finite real");
            *field(c) = d;
          }};
}

template <typename F>
Binding Bool(const char* key, F field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return std::string(*field(const_cast<ExperimentConfig&>(c))
                                   ? "true"
                                   : "false");
          },
          [key, field](ExperimentConfig& c, std::string_view v) {
            *field(c) = ParseBool(key, v);
          }};
}

template <typename F>
Binding Str(const char* key, F field) {
  return {key,
          [field](const ExperimentConfig& c) {
            return *field(const_cast<ExperimentConfig&>(c));
          },
          [field](ExperimentConfig& c, std::string_view v) {
            *field(c) = std::string(v);
          }};
}

#define SDAFL_FIELD(expr) [](ExperimentConfig& c) { return &(c.expr); }

const std::vector<Binding>& Bindings() {
  static const std::vector<Binding>* bindings = new std::vector<Binding>{
      Int("rounds", SDAFL_FIELD(fl.rounds)),
      Int("clients", SDAFL_FIELD(fl.clients)),
      Real("participation", SDAFL_FIELD(fl.participation)),
      Int("local_steps", SDAFL_FIELD(fl.local_steps)),
      Int("batch_size", SDAFL_FIELD(fl.batch_size)),
      Real("learning_rate", SDAFL_FIELD(fl.learning_rate)),
      Real("threshold", SDAFL_FIELD(fl.threshold)),
      Real("mixup_alpha", SDAFL_FIELD(fl.mixup_alpha)),
      Real("lambda2", SDAFL_FIELD(fl.lambda2)),
      Real("prox_mu", SDAFL_FIELD(fl.prox_mu)),
      Int("server_steps", SDAFL_FIELD(fl.server_steps)),
      Int("synthetic_per_client", SDAFL_FIELD(fl.synthetic_per_client)),
      {"algorithm",
       [](const ExperimentConfig& c) {
         return std::string(fedcore::AlgorithmName(c.fl.algorithm));
       },
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.fl.algorithm = fedcore::ParseAlgorithm(v);
         } catch (const InvalidArgument&) {
           Bad("algorithm", v, "algorithm name");
         }
       }},
      Int("seed", SDAFL_FIELD(fl.seed)),
      Int("pseudo_label_rounds", SDAFL_FIELD(fl.pseudo_label_rounds)),
      Int("labeled_batch", SDAFL_FIELD(fl.labeled_batch)),
      Int("unlabeled_batch", SDAFL_FIELD(fl.unlabeled_batch)),
      Real("mix_weight", SDAFL_FIELD(fl.mix_weight)),
      Int("mix_mean_size", SDAFL_FIELD(fl.mix_mean_size)),
      Int("hidden_width", SDAFL_FIELD(fl.hidden_width)),
      Int("classes_per_client", SDAFL_FIELD(classes_per_client)),

      Int("gan_iterations", SDAFL_FIELD(gan.iterations)),
      Int("gan_critic_steps", SDAFL_FIELD(gan.critic_steps)),
      Int("gan_batch_size", SDAFL_FIELD(gan.batch_size)),
      Real("gan_gp_weight", SDAFL_FIELD(gan.gp_weight)),
      Int("gan_noise_dim", SDAFL_FIELD(gan.noise_dim)),
      Bool("gan_conditional", SDAFL_FIELD(gan.conditional)),
      Int("gan_hidden_width", SDAFL_FIELD(gan.hidden_width)),
      Real("gan_learning_rate", SDAFL_FIELD(gan.learning_rate)),
      Real("gan_beta1", SDAFL_FIELD(gan.beta1)),
      Real("gan_beta2", SDAFL_FIELD(gan.beta2)),
      Real("gan_aux_weight", SDAFL_FIELD(gan.aux_weight)),

      Bool("dp_enabled", SDAFL_FIELD(dp_enabled)),
      Real("dp_epsilon", SDAFL_FIELD(dp_epsilon)),
      Real("dp_delta", SDAFL_FIELD(dp_delta)),
      Real("dp_clip_bound", SDAFL_FIELD(dp_clip_bound)),
      {"dp_clip_mode",
       [](const ExperimentConfig& c) {
         return std::string(c.dp_clip_mode == dpgan::ClipMode::kMinibatch
                                ? "minibatch"
                                : "per_example");
       },
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "minibatch") {
           c.dp_clip_mode = dpgan::ClipMode::kMinibatch;
         } else if (v == "per_example") {
           c.dp_clip_mode = dpgan::ClipMode::kPerExample;
         } else {
           Bad("dp_clip_mode", v, "minibatch|per_example");
         }
       }},
      {"dp_log_base",
       [](const ExperimentConfig& c) {
         return std::string(c.dp_log_base == dpgan::LogBase::kNatural
                                ? "natural"
                                : "ten");
       },
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "natural") {
           c.dp_log_base = dpgan::LogBase::kNatural;
         } else if (v == "ten") {
           c.dp_log_base = dpgan::LogBase::kTen;
         } else {
           Bad("dp_log_base", v, "natural|ten");
         }
       }},

      Str("dataset", SDAFL_FIELD(data.dataset)),
      {"dataset_format",
       [](const ExperimentConfig& c) {
         return std::string(c.data.dataset_format == data::DatasetFormat::kIdx
                                ? "idx"
                                : "csv");
       },
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.data.dataset_format = data::ParseDatasetFormat(v);
         } catch (const InvalidArgument&) {
           Bad("dataset_format", v, "idx|csv");
         }
       }},
      Str("dataset_labels", SDAFL_FIELD(data.dataset_labels)),
      Str("test_dataset", SDAFL_FIELD(data.test_dataset)),
      Int("num_classes", SDAFL_FIELD(data.num_classes)),
      Real("pixel_max", SDAFL_FIELD(data.pixel_max)),
      Int("builtin_per_class", SDAFL_FIELD(data.builtin_per_class)),
      Int("builtin_test_per_class", SDAFL_FIELD(data.builtin_test_per_class)),
      Int("data_seed", SDAFL_FIELD(data.data_seed)),
      Int("labeled_per_client", SDAFL_FIELD(data.labeled_per_client)),
      Str("gan_dir", SDAFL_FIELD(gan_dir)),
      {"frechet_feature",
       [](const ExperimentConfig& c) {
         return std::string(c.frechet_feature == FeatureKind::kRaw ? "raw"
                                                                   : "classifier");
       },
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "raw") {
           c.frechet_feature = FeatureKind::kRaw;
         } else if (v == "classifier") {
           c.frechet_feature = FeatureKind::kClassifier;
         } else {
           Bad("frechet_feature", v, "raw|classifier");
         }
       }},
  };
  return *bindings;
}

#undef SDAFL_FIELD

const Binding* Find(std::string_view key) {
  for (const Binding& b : Bindings()) {
    if (key == b.key) return &b;
  }
  return nullptr;
}

}  // namespace

data::PartitionSpec ExperimentConfig::Partition() const {
  data::PartitionSpec p;
  p.num_clients = fl.clients;
  p.classes_per_client = classes_per_client;
  p.seed = fl.seed;
  return p;
}

void ExperimentConfig::Validate() const {
  fl.Validate();
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw InvalidArgument(std::string(key) + ": " + what);
  };
  require(classes_per_client >= 1, "classes_per_client", "must be >= 1");
  require(gan.iterations >= 0, "gan_iterations", "must be >= 0");
  require(gan.critic_steps >= 1, "gan_critic_steps", "must be >= 1");
  require(gan.batch_size >= 1, "gan_batch_size", "must be >= 1");
  require(gan.gp_weight >= 0, "gan_gp_weight", "must be >= 0");
  require(gan.noise_dim >= 1, "gan_noise_dim", "must be >= 1");
  require(gan.hidden_width >= 1, "gan_hidden_width", "must be >= 1");
  require(gan.learning_rate > 0, "gan_learning_rate", "must be > 0");
  require(gan.beta1 >= 0 && gan.beta1 < 1, "gan_beta1", "must be in [0, 1)");
  require(gan.beta2 >= 0 && gan.beta2 < 1, "gan_beta2", "must be in [0, 1)");
  require(gan.aux_weight >= 0, "gan_aux_weight", "must be >= 0");
  if (dp_enabled) {
    require(dp_epsilon > 0, "dp_epsilon", "must be > 0");
    require(dp_delta > 0 && dp_delta < 1, "dp_delta", "must be in (0, 1)");
    require(dp_clip_bound > 0, "dp_clip_bound", "must be > 0");
  }
  require(!data.dataset.empty(), "dataset", "must be set");
  require(data.pixel_max > 0, "pixel_max", "must be > 0");
  require(data.num_classes >= 0, "num_classes", "must be >= 0");
  require(data.builtin_per_class >= 1, "builtin_per_class", "must be >= 1");
  require(data.builtin_test_per_class >= 1, "builtin_test_per_class",
          "must be >= 1");
  require(data.labeled_per_client >= 1, "labeled_per_client", "must be >= 1");
  require(data.dataset == kBuiltinDigits || !data.test_dataset.empty(),
          "test_dataset", "required for file datasets");
}

ExperimentConfig ParseConfig(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) +
                            ": expected 'key = value', got '" +
                            std::string(line) + "'");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    const Binding* b = Find(key);
    if (b == nullptr) {
      throw InvalidArgument("unknown config key '" + std::string(key) + "'");
    }
    if (!seen.insert(std::string(key)).second) {
      throw InvalidArgument("duplicate config key '" + std::string(key) + "'");
    }
    b->set(cfg, value);
  }
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string SerializeConfig(const ExperimentConfig& config) {
  std::string out;
  for (const Binding& b : Bindings()) {
    out += b.key;
    out += " = ";
    out += b.get(config);
    out += '\n';
  }
  return out;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Binding& b : Bindings()) keys.emplace_back(b.key);
  return keys;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return SerializeConfig(a) == SerializeConfig(b);
}

}  // namespace sdafl::harness
