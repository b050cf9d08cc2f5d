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

// Planted-keyword corpora: each code owns a disjoint keyword set and every
// document carrying the code contains several of its keywords among noise
// words. Code frequencies follow a Zipf profile so that rare-code behaviour
// can be studied without credentialed clinical data.

#include <cstdint>
#include <string>
#include <vector>

#include "medcode/text.hpp"

namespace medcode {

struct CorpusSpec {
  int n_train = 2000;
  int n_dev = 200;
  int n_test = 400;
  int n_labels = 20;
  int min_length = 60;
  int max_length = 120;
  int keywords_per_label = 5;
  /// Keyword occurrences planted per assigned code.
  int planted_per_label = 3;
  /// Code i is drawn with weight 1 / (i + 1)^zipf_exponent.
  double zipf_exponent = 1.0;
  double mean_labels_per_doc = 2.0;
  int max_labels_per_doc = 6;
  int noise_vocab = 400;
  /// Per-document probability of one stray keyword from a code the
  /// document does not carry.
  double distractor_rate = 0.0;
  std::uint64_t seed = 7;

  /// Throws ConfigError when the invariants fail, including documents too
  /// short to hold the planted keywords.
  void validate() const;
};

struct SyntheticCorpus {
  Dataset data;
  /// keywords[i] belongs to the code data.labels.code(i).
  std::vector<std::vector<std::string>> keywords;
  /// Per-document inclusion probability of each code.
  std::vector<double> label_rates;
};

SyntheticCorpus generate_synthetic_corpus(const CorpusSpec& spec);

}  // namespace medcode
