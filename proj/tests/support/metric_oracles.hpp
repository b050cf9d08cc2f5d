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

// Slow, direct recomputations of the evaluation metrics, written without
// reference to the library implementation.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "medcode/evaluation.hpp"

namespace medcode::oracle {

struct Prf {
  double macro_p, macro_r, macro_f1, micro_p, micro_r, micro_f1;
};

inline Prf brute_prf(const std::vector<Prediction>& preds, double threshold) {
  const std::size_t m = preds.empty() ? 0 : preds[0].scores.size();
  double sp = 0, sr = 0, sf = 0;
  double all_tp = 0, all_pred = 0, all_gold = 0;
  for (std::size_t l = 0; l < m; ++l) {
    double tp = 0, predicted = 0, gold = 0;
    for (const auto& p : preds) {
      const bool yes = p.scores[l] >= threshold;
      predicted += yes;
      gold += p.gold[l];
      tp += yes && p.gold[l];
    }
    const double prec = predicted == 0 ? 0 : tp / predicted;
    const double rec = gold == 0 ? 0 : tp / gold;
    sp += prec;
    sr += rec;
    sf += prec + rec == 0 ? 0 : 2 * prec * rec / (prec + rec);
    all_tp += tp;
    all_pred += predicted;
    all_gold += gold;
  }
  Prf out{};
  if (m) {
    out.macro_p = sp / m;
    out.macro_r = sr / m;
    out.macro_f1 = sf / m;
  }
  out.micro_p = all_pred == 0 ? 0 : all_tp / all_pred;
  out.micro_r = all_gold == 0 ? 0 : all_tp / all_gold;
  out.micro_f1 = out.micro_p + out.micro_r == 0
                     ? 0
                     : 2 * out.micro_p * out.micro_r / (out.micro_p + out.micro_r);
  return out;
}

/// Area under the ROC polyline traced by sweeping the threshold down
/// through every distinct score; tied scores move diagonally.
inline double trapezoid_auc(const std::vector<double>& scores,
                            const std::vector<std::uint8_t>& gold) {
  double pos = 0, neg = 0;
  for (auto g : gold) (g ? pos : neg) += 1;
  std::set<double, std::greater<double>> cuts(scores.begin(), scores.end());
  double area = 0, prev_tpr = 0, prev_fpr = 0;
  for (double t : cuts) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (gold[i] ? tp : fp) += 1;
    }
    const double tpr = tp / pos, fpr = fp / neg;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

inline double brute_p_at_k(const std::vector<Prediction>& preds, int k) {
  double total = 0;
  for (const auto& p : preds) {
    std::vector<std::size_t> chosen;
    std::vector<bool> used(p.scores.size(), false);
    for (int i = 0; i < k; ++i) {
      std::size_t best = p.scores.size();
      for (std::size_t l = 0; l < p.scores.size(); ++l) {
        if (used[l]) continue;
        if (best == p.scores.size() || p.scores[l] > p.scores[best]) best = l;
      }
      used[best] = true;
      chosen.push_back(best);
    }
    double hits = 0;
    for (auto l : chosen) hits += p.gold[l];
    total += hits / k;
  }
  return total / preds.size();
}

/// Random instance; scores come from a small grid so ties are common.
inline std::vector<Prediction> random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> docs(1, 32), labels(1, 8), grid(0, 10), coin(0, 2);
  const int n = docs(rng), m = labels(rng);
  std::vector<Prediction> preds(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) {
    auto& p = preds[static_cast<std::size_t>(d)];
    p.id = std::to_string(d);
    for (int l = 0; l < m; ++l) {
      p.scores.push_back(grid(rng) / 10.0);
      p.gold.push_back(coin(rng) == 0);
    }
  }
  return preds;
}

}  // namespace medcode::oracle
