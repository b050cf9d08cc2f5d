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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace medcode {

/// Tokenized note with its gold code set.
struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<int> token_ids;
  std::set<std::string> labels;
};

/// Lowercased purely alphabetic words. Splits on any character that is
/// neither an ASCII letter, digit nor a non-ASCII byte, then drops tokens
/// that contain anything but letters.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSeg = 2;
  static constexpr int kNumSpecial = 3;

  Vocabulary();

  /// Specials first, then words with count >= min_count ordered by
  /// (count desc, word asc).
  static Vocabulary build(std::span<const Document> docs, int min_count = 3);
  /// Rebuilds from an id-ordered word list (as written by save()).
  static Vocabulary from_words(std::vector<std::string> words);

  int id(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view word) const;
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Ordered code set with per-code training-split frequencies.
class LabelSpace {
 public:
  LabelSpace() = default;
  /// Codes sorted ascending; frequencies counted over docs.
  static LabelSpace from_training(std::span<const Document> train);
  LabelSpace(std::vector<std::string> codes, std::vector<int> frequencies);

  int size() const { return static_cast<int>(codes_.size()); }
  /// -1 if absent.
  int index(const std::string& code) const;
  const std::string& code(int i) const { return codes_.at(static_cast<std::size_t>(i)); }
  int frequency(int i) const { return frequencies_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& codes() const { return codes_; }
  const std::vector<int>& frequencies() const { return frequencies_; }

  /// Multi-hot vector in label order.
  std::vector<std::uint8_t> encode(const std::set<std::string>& labels) const;

  /// "code<TAB>frequency" per line.
  void save(const std::filesystem::path& path) const;
  static LabelSpace load(const std::filesystem::path& path);

 private:
  std::vector<std::string> codes_;
  std::vector<int> frequencies_;
  std::unordered_map<std::string, int> index_;
};

struct Dataset {
  std::vector<Document> train;
  std::vector<Document> dev;
  std::vector<Document> test;
  LabelSpace labels;
};

/// Maps tokens to ids (UNK for OOV) and keeps the first max_len.
std::vector<int> encode_and_truncate(const Document& doc,
                                     const Vocabulary& vocab, int max_len);

/// Truncates to max_total ids, then cuts consecutive chunks of seg_len - 1
/// ids, each prefixed with SEG. Empty input yields a single [SEG].
std::vector<std::vector<int>> segment(std::span<const int> token_ids,
                                      int seg_len, int max_total);

/// Keeps the k codes most frequent in train (ties by code ascending),
/// strips other codes from every split, drops documents left without
/// codes and rebuilds the label space.
Dataset filter_top_k_labels(const Dataset& data, int k);

/// Removes codes absent from labels. Returns the number of code
/// occurrences dropped.
std::size_t restrict_to_label_space(std::vector<Document>& docs,
                                    const LabelSpace& labels);

// Line-delimited {"id", "text", "labels"} records.
std::vector<Document> read_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path,
                     std::span<const Document> docs);

}  // namespace medcode
