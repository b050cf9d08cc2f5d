// Copyright 2026 The medcode Authors.
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
#pragma once

// Config-file driven command layer behind the medcode tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medcode/cbow.hpp"
#include "medcode/models.hpp"
#include "medcode/synthetic.hpp"
#include "medcode/training.hpp"

namespace medcode {

enum class DataSource { Synthetic, Jsonl, MimicCsv };

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  /// jsonl splits.
  std::filesystem::path train;
  std::filesystem::path dev;
  std::filesystem::path test;
  /// mimic_csv inputs; dev and test are carved out of the ingested notes.
  std::filesystem::path notes;
  std::vector<std::filesystem::path> codes;
  double dev_fraction = 0.1;
  double test_fraction = 0.1;
  CorpusSpec synthetic;
  /// Keep only the k most frequent training codes; 0 keeps all.
  int top_k = 0;
  int min_count = 3;
};

struct EvalConfig {
  std::vector<int> ks{5, 8, 15};
  std::vector<int> bin_edges = kDefaultBinEdges;
  double threshold = 0.5;
  std::string split = "test";
};

struct RunConfig {
  DataConfig data;
  /// vocab_size and num_labels are filled in from the preprocessed data.
  ModelSpec model;
  CbowConfig embeddings;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path output_dir = "runs/medcode";
  std::uint64_t seed = 42;
};

/// Parses and validates a config document. Missing keys take defaults;
/// unknown keys and wrongly typed values throw ConfigError naming the key.
RunConfig parse_config_json(const nlohmann::json& j);

/// Reads the file, applies "dotted.key=value" overrides, then parses.
RunConfig parse_config(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides = {});

/// Sets one dotted key. The value is read as JSON when it parses and as a
/// plain string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json to_json(const RunConfig& config);

enum class Command { Preprocess, PretrainEmbeddings, Train, Evaluate, Predict, BinAnalysis };

Command parse_command(const std::string& name);
std::string to_string(Command c);

/// Artifact names inside output_dir.
namespace artifacts {
inline constexpr const char* kVocab = "vocab.txt";
inline constexpr const char* kLabels = "labels.txt";
inline constexpr const char* kEmbeddings = "embeddings.vec";
inline constexpr const char* kCheckpoint = "model.ckpt";
inline constexpr const char* kHistory = "history.log";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kPredictions = "predictions.jsonl";
inline constexpr const char* kBins = "bins.json";
std::string dataset(const std::string& split);
std::string manifest(Command c);
}  // namespace artifacts

/// Runs one command. Throws the library errors on failure; returns 3 when
/// training stopped on a non-finite value after saving its best model.
int run_command(Command command, const RunConfig& config, std::ostream& log);

/// 1 usage or config, 2 data, 3 numeric, 1 otherwise.
int exit_code_for(const std::exception& e);

std::string tool_version();

}  // namespace medcode
