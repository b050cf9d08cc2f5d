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

#include "medcode/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "medcode/errors.hpp"
#include "medcode/random.hpp"

namespace medcode {
namespace {

constexpr double kMaxLabelRate = 0.95;

std::string make_word(Rng& rng) {
  std::uniform_int_distribution<int> len(4, 8);
  std::uniform_int_distribution<int> letter(0, 25);
  std::string w(static_cast<std::size_t>(len(rng)), 'a');
  for (auto& c : w) c = static_cast<char>('a' + letter(rng));
  return w;
}

std::vector<std::string> make_unique_words(int count, Rng& rng,
                                           std::set<std::string>& taken) {
  std::vector<std::string> words;
  while (static_cast<int>(words.size()) < count) {
    std::string w = make_word(rng);
    if (taken.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Per-document inclusion rates proportional to the Zipf weights, scaled so
// their sum is the requested label cardinality.
std::vector<double> label_rates(const CorpusSpec& spec) {
  std::vector<double> weights(static_cast<std::size_t>(spec.n_labels));
  for (int i = 0; i < spec.n_labels; ++i) {
    weights[static_cast<std::size_t>(i)] = 1.0 / std::pow(i + 1.0, spec.zipf_exponent);
  }
  auto total_at = [&](double c) {
    double s = 0;
    for (double w : weights) s += std::min(kMaxLabelRate, c * w);
    return s;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (total_at(hi) < spec.mean_labels_per_doc) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total_at(mid) < spec.mean_labels_per_doc ? lo : hi) = mid;
  }
  std::vector<double> rates;
  for (double w : weights) rates.push_back(std::min(kMaxLabelRate, hi * w));
  return rates;
}

std::string label_code(int i, int n_labels) {
  const int width = static_cast<int>(std::to_string(std::max(1, n_labels - 1)).size());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "C%0*d", width, i);
  return buf;
}

struct SplitPlan {
  std::string prefix;
  int size;
  bool every_label_present;
};

}  // namespace

void CorpusSpec::validate() const {
  if (n_train < 1 || n_dev < 0 || n_test < 0) {
    throw ConfigError("corpus: split sizes must be non-negative with n_train >= 1");
  }
  if (n_labels < 1) throw ConfigError("corpus: n_labels must be >= 1");
  if (keywords_per_label < 1) throw ConfigError("corpus: keywords_per_label must be >= 1");
  if (planted_per_label < 1) throw ConfigError("corpus: planted_per_label must be >= 1");
  if (min_length < 1 || max_length < min_length) {
    throw ConfigError("corpus: need 1 <= min_length <= max_length");
  }
  if (max_labels_per_doc < 1) throw ConfigError("corpus: max_labels_per_doc must be >= 1");
  if (zipf_exponent < 0) throw ConfigError("corpus: zipf_exponent must be >= 0");
  if (noise_vocab < 1) throw ConfigError("corpus: noise_vocab must be >= 1");
  if (distractor_rate < 0 || distractor_rate > 1) {
    throw ConfigError("corpus: distractor_rate must lie in [0, 1]");
  }
  const double cap = std::min<double>(max_labels_per_doc, kMaxLabelRate * n_labels);
  if (!(mean_labels_per_doc > 0) || mean_labels_per_doc > cap) {
    throw ConfigError("corpus: mean_labels_per_doc must lie in (0, " +
                      std::to_string(cap) + "]");
  }
  const int needed = planted_per_label * max_labels_per_doc + (distractor_rate > 0 ? 1 : 0);
  if (min_length < needed) {
    throw ConfigError("corpus: min_length " + std::to_string(min_length) +
                      " cannot hold " + std::to_string(needed) +
                      " planted keywords");
  }
}

SyntheticCorpus generate_synthetic_corpus(const CorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  SyntheticCorpus corpus;
  std::set<std::string> taken;
  for (int i = 0; i < spec.n_labels; ++i) {
    corpus.keywords.push_back(make_unique_words(spec.keywords_per_label, rng, taken));
  }
  const auto noise_words = make_unique_words(spec.noise_vocab, rng, taken);
  std::vector<double> noise_weights;
  for (int i = 0; i < spec.noise_vocab; ++i) noise_weights.push_back(1.0 / (i + 1.0));
  std::discrete_distribution<int> noise(noise_weights.begin(), noise_weights.end());

  corpus.label_rates = label_rates(spec);
  std::vector<std::string> codes;
  for (int i = 0; i < spec.n_labels; ++i) codes.push_back(label_code(i, spec.n_labels));

  const SplitPlan plans[] = {{"train", spec.n_train, true},
                             {"dev", spec.n_dev, false},
                             {"test", spec.n_test, false}};
  std::vector<Document>* outputs[] = {&corpus.data.train, &corpus.data.dev,
                                      &corpus.data.test};

  std::uniform_int_distribution<int> length(spec.min_length, spec.max_length);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int s = 0; s < 3; ++s) {
    const auto& plan = plans[s];
    const auto n = static_cast<std::size_t>(plan.size);
    // Each code goes to round(n * rate) documents chosen uniformly among
    // those still below the per-document cap.
    std::vector<std::vector<int>> assigned(n);
    for (int l = 0; l < spec.n_labels; ++l) {
      auto target = static_cast<std::size_t>(
          std::llround(plan.size * corpus.label_rates[static_cast<std::size_t>(l)]));
      if (plan.every_label_present) target = std::max<std::size_t>(target, 1);
      std::vector<std::size_t> eligible;
      for (std::size_t d = 0; d < n; ++d) {
        if (static_cast<int>(assigned[d].size()) < spec.max_labels_per_doc) eligible.push_back(d);
      }
      std::shuffle(eligible.begin(), eligible.end(), rng);
      for (std::size_t k = 0; k < std::min(target, eligible.size()); ++k) {
        assigned[eligible[k]].push_back(l);
      }
    }

    for (std::size_t d = 0; d < n; ++d) {
      Document doc;
      char id[48];
      std::snprintf(id, sizeof(id), "%s-%06zu", plan.prefix.c_str(), d);
      doc.id = id;
      const int len = length(rng);

      // Each label contributes one phrase of planted keywords; an optional
      // distractor is a one-word phrase. Phrases are dropped into the noise
      // stream at random gaps.
      std::vector<std::vector<std::string>> phrases;
      for (int l : assigned[d]) {
        doc.labels.insert(codes[static_cast<std::size_t>(l)]);
        auto kws = corpus.keywords[static_cast<std::size_t>(l)];
        std::shuffle(kws.begin(), kws.end(), rng);
        std::vector<std::string> phrase;
        for (int p = 0; p < spec.planted_per_label; ++p) {
          phrase.push_back(kws[static_cast<std::size_t>(p) % kws.size()]);
        }
        phrases.push_back(std::move(phrase));
      }
      if (spec.distractor_rate > 0 && unit(rng) < spec.distractor_rate &&
          static_cast<int>(assigned[d].size()) < spec.n_labels) {
        std::uniform_int_distribution<int> pick(0, spec.n_labels - 1);
        int l = pick(rng);
        while (std::find(assigned[d].begin(), assigned[d].end(), l) != assigned[d].end()) {
          l = pick(rng);
        }
        const auto& kws = corpus.keywords[static_cast<std::size_t>(l)];
        std::uniform_int_distribution<std::size_t> kw(0, kws.size() - 1);
        phrases.push_back({kws[kw(rng)]});
      }
      std::shuffle(phrases.begin(), phrases.end(), rng);

      std::size_t planted = 0;
      for (const auto& ph : phrases) planted += ph.size();
      const std::size_t n_noise = static_cast<std::size_t>(len) - planted;
      std::uniform_int_distribution<std::size_t> gap(0, n_noise);
      std::vector<std::size_t> gaps;
      for (std::size_t i = 0; i < phrases.size(); ++i) gaps.push_back(gap(rng));
      std::sort(gaps.begin(), gaps.end());

      doc.tokens.reserve(static_cast<std::size_t>(len));
      std::size_t next = 0;
      for (std::size_t i = 0; i <= n_noise; ++i) {
        while (next < gaps.size() && gaps[next] == i) {
          doc.tokens.insert(doc.tokens.end(), phrases[next].begin(), phrases[next].end());
          ++next;
        }
        if (i < n_noise) doc.tokens.push_back(noise_words[static_cast<std::size_t>(noise(rng))]);
      }
      for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        if (i) doc.text += ' ';
        doc.text += doc.tokens[i];
      }
      outputs[s]->push_back(std::move(doc));
    }
  }
  corpus.data.labels = LabelSpace::from_training(corpus.data.train);
  return corpus;
}

}  // namespace medcode
