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

#include "medcode/cbow.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "medcode/errors.hpp"

namespace medcode {
namespace {

double logistic(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

Matrix<double> train_cbow(std::span<const std::vector<int>> sequences,
                          const Vocabulary& vocab, const CbowConfig& config) {
  if (config.dim < 2) throw ConfigError("train_cbow: dim must be >= 2");
  if (config.window < 1) throw ConfigError("train_cbow: window must be >= 1");
  if (config.negatives < 1) {
    throw ConfigError("train_cbow: negatives must be >= 1");
  }
  if (config.epochs < 0) throw ConfigError("train_cbow: epochs must be >= 0");

  const Index vocab_size = vocab.size();
  const Index dim = config.dim;
  Rng rng(config.seed);
  std::uniform_real_distribution<double> init(-0.5 / dim, 0.5 / dim);
  Matrix<double> input(vocab_size, dim);
  for (Index i = 0; i < input.size(); ++i) input.data()[i] = init(rng);
  Matrix<double> output = Matrix<double>::Zero(vocab_size, dim);

  std::vector<double> weights(static_cast<std::size_t>(vocab_size), 0.0);
  std::size_t total_tokens = 0;
  for (const auto& seq : sequences) {
    for (int id : seq) {
      if (id < 0 || id >= vocab_size) {
        throw DimensionError("train_cbow: id " + std::to_string(id) +
                             " outside vocabulary");
      }
      weights[static_cast<std::size_t>(id)] += 1.0;
    }
    total_tokens += seq.size();
  }
  weights[Vocabulary::kPad] = 0.0;
  weights[Vocabulary::kSeg] = 0.0;
  double weight_total = 0;
  for (auto& w : weights) {
    w = std::pow(w, 0.75);
    weight_total += w;
  }

  if (weight_total > 0 && config.epochs > 0) {
    std::discrete_distribution<int> negative(weights.begin(), weights.end());
    const double total_steps =
        static_cast<double>(total_tokens) * config.epochs;
    double step = 0;
    Eigen::RowVectorXd hidden(dim);
    Eigen::RowVectorXd err(dim);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      for (const auto& seq : sequences) {
        const auto n = static_cast<std::ptrdiff_t>(seq.size());
        for (std::ptrdiff_t pos = 0; pos < n; ++pos, ++step) {
          const double lr =
              config.lr * std::max(1e-4, 1.0 - step / total_steps);
          hidden.setZero();
          int context = 0;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - config.window);
          const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, pos + config.window);
          for (std::ptrdiff_t c = lo; c <= hi; ++c) {
            if (c == pos) continue;
            hidden += input.row(seq[static_cast<std::size_t>(c)]);
            ++context;
          }
          if (context == 0) continue;
          hidden /= context;
          err.setZero();
          const int target = seq[static_cast<std::size_t>(pos)];
          for (int s = 0; s <= config.negatives; ++s) {
            int word = target;
            double label = 1.0;
            if (s > 0) {
              word = negative(rng);
              if (word == target) continue;
              label = 0.0;
            }
            auto out_row = output.row(word);
            const double g = (label - logistic(hidden.dot(out_row))) * lr;
            err += g * out_row;
            out_row += g * hidden;
          }
          for (std::ptrdiff_t c = lo; c <= hi; ++c) {
            if (c == pos) continue;
            input.row(seq[static_cast<std::size_t>(c)]) += err;
          }
        }
      }
    }
  }
  input.row(Vocabulary::kPad).setZero();
  return input;
}

double cosine_similarity(const Matrix<double>& table, int a, int b) {
  const auto ra = table.row(a);
  const auto rb = table.row(b);
  const double denom = ra.norm() * rb.norm();
  return denom > 0 ? ra.dot(rb) / denom : 0.0;
}

void write_embeddings(const std::filesystem::path& path,
                      const Vocabulary& vocab, const Matrix<double>& table) {
  if (table.rows() != vocab.size()) {
    throw DimensionError("write_embeddings: table has " +
                         std::to_string(table.rows()) + " rows for " +
                         std::to_string(vocab.size()) + " words");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << table.rows() << ' ' << table.cols() << '\n';
  char buf[32];
  for (Index r = 0; r < table.rows(); ++r) {
    out << vocab.word(static_cast<int>(r));
    for (Index c = 0; c < table.cols(); ++c) {
      // Float precision round-trips exactly into the 32-bit model weights.
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(static_cast<float>(table(r, c))));
      out << buf;
    }
    out << '\n';
  }
}

Matrix<double> read_embeddings(const std::filesystem::path& path,
                               const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  Index rows = 0;
  Index dim = 0;
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  if (!(hs >> rows >> dim) || rows < 0 || dim < 1) {
    throw DataError(path.string() + ": malformed header '" + header + "'");
  }
  std::unordered_map<std::string, Eigen::RowVectorXd> rows_by_word;
  std::string line;
  for (Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw DataError(path.string() + ": expected " + std::to_string(rows) +
                      " rows, found " + std::to_string(r));
    }
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    Eigen::RowVectorXd v(dim);
    for (Index c = 0; c < dim; ++c) {
      if (!(ls >> v(c))) {
        throw DataError(path.string() + ": row " + std::to_string(r + 2) +
                        " has fewer than " + std::to_string(dim) + " values");
      }
    }
    rows_by_word[word] = std::move(v);
  }
  Matrix<double> table(vocab.size(), dim);
  for (int i = 0; i < vocab.size(); ++i) {
    auto it = rows_by_word.find(vocab.word(i));
    if (it == rows_by_word.end()) {
      throw DataError(path.string() + ": no vector for '" + vocab.word(i) + "'");
    }
    table.row(i) = it->second;
  }
  return table;
}

}  // namespace medcode
