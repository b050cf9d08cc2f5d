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
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "medcode/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"medcode: automatic ICD coding of clinical notes"};
  app.set_version_flag("--version", medcode::tool_version());
  app.require_subcommand(1, 1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::string seed;

  const std::pair<const char*, const char*> commands[] = {
      {"preprocess", "Build dataset splits, vocabulary and label space"},
      {"pretrain-embeddings", "Train CBOW word vectors on the training split"},
      {"train", "Train a model and write model.ckpt and history.log"},
      {"evaluate", "Score a split and write metrics.json"},
      {"predict", "Score a split and write predictions.jsonl"},
      {"bin-analysis", "Macro/micro F1 by training-frequency bin, written to bins.json"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_option("--set", overrides, "Override a config key, e.g. train.lr=0.001");
    sub->add_option("-o,--output-dir", output_dir, "Same as output_dir=...");
    sub->add_option("--seed", seed, "Same as seed=...");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (!output_dir.empty()) overrides.push_back("output_dir=" + nlohmann::json(output_dir).dump());
    if (!seed.empty()) overrides.push_back("seed=" + seed);
    const auto command = medcode::parse_command(app.get_subcommands().front()->get_name());
    const auto config = medcode::parse_config(config_path, overrides);
    return medcode::run_command(command, config, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "medcode: error: " << e.what() << '\n';
    return medcode::exit_code_for(e);
  }
}
