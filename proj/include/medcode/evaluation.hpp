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

// Multi-label metrics: thresholded P/R/F1 (macro and micro), rank AUC,
// precision at k and frequency-binned F1.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medcode/text.hpp"

namespace medcode {

struct Prediction {
  std::string id;
  /// Per-label scores in [0, 1], label-space order.
  std::vector<double> scores;
  std::vector<std::uint8_t> gold;
};

struct LabelCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

/// Binarises at score >= threshold.
std::vector<LabelCounts> confusion_counts(std::span<const Prediction> preds,
                                          double threshold = 0.5);

struct PrfScores {
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  double micro_precision = 0;
  double micro_recall = 0;
  double micro_f1 = 0;
};

/// Zero denominators contribute 0. Macro F1 averages per-label F1.
PrfScores macro_micro_prf(std::span<const LabelCounts> counts);

/// Mann-Whitney AUC with ties counted as one half. nullopt when gold lacks
/// a positive or a negative.
std::optional<double> binary_auc(std::span<const double> scores,
                                 std::span<const std::uint8_t> gold);

struct AucScores {
  /// Mean over labels having both classes; nullopt if there are none.
  std::optional<double> macro;
  /// Single AUC over all pooled (document, label) cells.
  std::optional<double> micro;
  int labels_used = 0;
  int labels_skipped = 0;
};

AucScores auc_roc(std::span<const Prediction> preds);

/// Mean over documents of |top-k ∩ gold| / k; ties go to the lower index.
double precision_at_k(std::span<const Prediction> preds, int k);

struct BinScores {
  /// Frequencies in [lower, upper] when lower_inclusive, else (lower, upper];
  /// upper absent means unbounded.
  int lower = 0;
  bool lower_inclusive = false;
  std::optional<int> upper;
  int labels = 0;
  long tp = 0;
  double macro_f1 = 0;
  double micro_f1 = 0;

  std::string range() const;
};

/// Default edges {1, 10, 50, 100, 500}: [1,10], (10,50], (50,100],
/// (100,500], (500,inf).
inline const std::vector<int> kDefaultBinEdges{1, 10, 50, 100, 500};

/// Groups labels by training frequency. A label below the first edge is a
/// DataError.
std::vector<BinScores> frequency_binned_f1(std::span<const Prediction> preds,
                                           const LabelSpace& labels,
                                           std::span<const int> edges,
                                           double threshold = 0.5);

struct MetricsReport {
  int documents = 0;
  int labels = 0;
  double threshold = 0.5;
  PrfScores prf;
  AucScores auc;
  std::map<int, double> p_at_k;
  std::vector<BinScores> bins;
  /// Labels with no gold positive among the documents (contribute 0 to F1).
  int labels_without_positives = 0;
};

MetricsReport evaluate_predictions(std::span<const Prediction> preds,
                                   const LabelSpace& labels,
                                   std::span<const int> ks,
                                   std::span<const int> bin_edges,
                                   double threshold = 0.5);

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json bins_to_json(std::span<const BinScores> bins);

/// Line-delimited {"id", "scores", "gold": [codes]}.
void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> preds, const LabelSpace& labels);
std::vector<Prediction> read_predictions(const std::filesystem::path& path,
                                         const LabelSpace& labels);

}  // namespace medcode
