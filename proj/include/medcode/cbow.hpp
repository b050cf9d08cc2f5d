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

// word2vec continuous bag-of-words with negative sampling, used to produce
// the static (frozen) word vectors consumed by the CNN baselines.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "medcode/tensor.hpp"
#include "medcode/text.hpp"

namespace medcode {

struct CbowConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  /// Starting learning rate, decayed linearly to lr * 1e-4.
  double lr = 0.025;
  std::uint64_t seed = 1;
};

/// Trains input vectors over id sequences. Rows follow vocabulary ids; the
/// PAD row is zero. epochs = 0 returns the seeded initialisation.
Matrix<double> train_cbow(std::span<const std::vector<int>> sequences,
                          const Vocabulary& vocab, const CbowConfig& config);

double cosine_similarity(const Matrix<double>& table, int a, int b);

/// Text format: header "V dim", then per row the word and dim floats.
void write_embeddings(const std::filesystem::path& path,
                      const Vocabulary& vocab, const Matrix<double>& table);

/// Reads a table written by write_embeddings and aligns its rows to vocab.
/// Every vocabulary word must be present.
Matrix<double> read_embeddings(const std::filesystem::path& path,
                               const Vocabulary& vocab);

}  // namespace medcode
