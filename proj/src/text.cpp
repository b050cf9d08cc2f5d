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

#include "medcode/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "medcode/errors.hpp"

namespace medcode {
namespace {

bool is_ascii_letter(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_token_char(unsigned char c) {
  return is_ascii_letter(c) || (c >= '0' && c <= '9') || c >= 0x80;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    bool alphabetic = true;
    while (i < text.size() && is_token_char(static_cast<unsigned char>(text[i]))) {
      alphabetic = alphabetic && is_ascii_letter(static_cast<unsigned char>(text[i]));
      ++i;
    }
    if (i > start && alphabetic) {
      std::string tok(text.substr(start, i - start));
      for (auto& c : tok) c = static_cast<char>(c | 0x20);
      tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : words_{"<pad>", "<unk>", "<seg>"} {
  for (int i = 0; i < kNumSpecial; ++i) index_[words_[static_cast<std::size_t>(i)]] = i;
}

Vocabulary Vocabulary::build(std::span<const Document> docs, int min_count) {
  if (min_count < 1) throw ConfigError("build_vocab: min_count must be >= 1");
  std::unordered_map<std::string, int> counts;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, int>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  for (auto& [w, c] : kept) {
    v.index_[w] = static_cast<int>(v.words_.size());
    v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  Vocabulary v;
  if (words.size() < kNumSpecial ||
      !std::equal(v.words_.begin(), v.words_.end(), words.begin())) {
    throw DataError("vocabulary must start with <pad>, <unk>, <seg>");
  }
  v.words_ = std::move(words);
  v.index_.clear();
  for (std::size_t i = 0; i < v.words_.size(); ++i) {
    if (!v.index_.emplace(v.words_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocabulary entry '" + v.words_[i] + "'");
    }
  }
  return v;
}

int Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.count(std::string(word)) > 0;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  auto out = open_output(path);
  for (const auto& w : words_) out << w << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) words.push_back(line);
  return from_words(std::move(words));
}

// ---------------------------------------------------------------------------

LabelSpace::LabelSpace(std::vector<std::string> codes, std::vector<int> frequencies)
    : codes_(std::move(codes)), frequencies_(std::move(frequencies)) {
  if (codes_.size() != frequencies_.size()) {
    throw DataError("label space: codes and frequencies differ in length");
  }
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    if (frequencies_[i] < 0) throw DataError("label space: negative frequency");
    if (!index_.emplace(codes_[i], static_cast<int>(i)).second) {
      throw DataError("label space: duplicate code '" + codes_[i] + "'");
    }
  }
}

LabelSpace LabelSpace::from_training(std::span<const Document> train) {
  std::map<std::string, int> counts;
  for (const auto& d : train) {
    for (const auto& l : d.labels) ++counts[l];
  }
  std::vector<std::string> codes;
  std::vector<int> freqs;
  for (auto& [c, n] : counts) {
    codes.push_back(c);
    freqs.push_back(n);
  }
  return LabelSpace(std::move(codes), std::move(freqs));
}

int LabelSpace::index(const std::string& code) const {
  auto it = index_.find(code);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::uint8_t> LabelSpace::encode(const std::set<std::string>& labels) const {
  std::vector<std::uint8_t> hot(codes_.size(), 0);
  for (const auto& l : labels) {
    const int i = index(l);
    if (i >= 0) hot[static_cast<std::size_t>(i)] = 1;
  }
  return hot;
}

void LabelSpace::save(const std::filesystem::path& path) const {
  auto out = open_output(path);
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    out << codes_[i] << '\t' << frequencies_[i] << '\n';
  }
}

LabelSpace LabelSpace::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> codes;
  std::vector<int> freqs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected code<TAB>frequency");
    }
    codes.push_back(line.substr(0, tab));
    freqs.push_back(std::stoi(line.substr(tab + 1)));
  }
  return LabelSpace(std::move(codes), std::move(freqs));
}

// ---------------------------------------------------------------------------

std::vector<int> encode_and_truncate(const Document& doc, const Vocabulary& vocab,
                                     int max_len) {
  if (max_len < 1) throw ConfigError("encode_and_truncate: max_len must be positive");
  const std::size_t n = std::min(doc.tokens.size(), static_cast<std::size_t>(max_len));
  std::vector<int> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(vocab.id(doc.tokens[i]));
  return ids;
}

std::vector<std::vector<int>> segment(std::span<const int> token_ids, int seg_len,
                                      int max_total) {
  if (seg_len < 2) throw ConfigError("segment: seg_len must be >= 2");
  if (max_total < seg_len) throw ConfigError("segment: max_total must be >= seg_len");
  const std::size_t total = std::min(token_ids.size(), static_cast<std::size_t>(max_total));
  const std::size_t content = static_cast<std::size_t>(seg_len - 1);
  std::vector<std::vector<int>> segments;
  for (std::size_t start = 0; start < total; start += content) {
    const std::size_t end = std::min(total, start + content);
    std::vector<int> seg;
    seg.reserve(end - start + 1);
    seg.push_back(Vocabulary::kSeg);
    seg.insert(seg.end(), token_ids.begin() + static_cast<std::ptrdiff_t>(start),
               token_ids.begin() + static_cast<std::ptrdiff_t>(end));
    segments.push_back(std::move(seg));
  }
  if (segments.empty()) segments.push_back({Vocabulary::kSeg});
  return segments;
}

// ---------------------------------------------------------------------------

Dataset filter_top_k_labels(const Dataset& data, int k) {
  if (k <= 0) throw ConfigError("filter_top_k_labels: k must be positive");
  const LabelSpace all = LabelSpace::from_training(data.train);
  if (k > all.size()) {
    throw ConfigError("filter_top_k_labels: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(all.size()) + " training codes");
  }
  std::vector<int> order(static_cast<std::size_t>(all.size()));
  for (int i = 0; i < all.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (all.frequency(a) != all.frequency(b)) return all.frequency(a) > all.frequency(b);
    return all.code(a) < all.code(b);
  });
  std::set<std::string> keep;
  for (int i = 0; i < k; ++i) keep.insert(all.code(order[static_cast<std::size_t>(i)]));

  auto filter_split = [&](const std::vector<Document>& docs) {
    std::vector<Document> out;
    for (const auto& d : docs) {
      Document copy = d;
      std::erase_if(copy.labels, [&](const std::string& l) { return !keep.count(l); });
      if (!copy.labels.empty()) out.push_back(std::move(copy));
    }
    return out;
  };
  Dataset out;
  out.train = filter_split(data.train);
  out.dev = filter_split(data.dev);
  out.test = filter_split(data.test);
  out.labels = LabelSpace::from_training(out.train);
  return out;
}

std::size_t restrict_to_label_space(std::vector<Document>& docs, const LabelSpace& labels) {
  std::size_t dropped = 0;
  for (auto& d : docs) {
    dropped += std::erase_if(d.labels, [&](const std::string& l) { return labels.index(l) < 0; });
  }
  return dropped;
}

// ---------------------------------------------------------------------------

std::vector<Document> read_documents(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Document> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Document d;
      d.id = j.at("id").get<std::string>();
      d.text = j.at("text").get<std::string>();
      for (const auto& l : j.at("labels")) d.labels.insert(l.get<std::string>());
      d.tokens = tokenize(d.text);
      docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

void write_documents(const std::filesystem::path& path, std::span<const Document> docs) {
  auto out = open_output(path);
  for (const auto& d : docs) {
    std::string text;
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      if (i) text += ' ';
      text += d.tokens[i];
    }
    nlohmann::json j = {{"id", d.id}, {"text", text}, {"labels", d.labels}};
    out << j.dump() << '\n';
  }
}

}  // namespace medcode
