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
#include "medcode/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "medcode/errors.hpp"

namespace medcode {
namespace {

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

std::size_t label_count(std::span<const Prediction> preds) {
  if (preds.empty()) return 0;
  const std::size_t m = preds[0].scores.size();
  for (const auto& p : preds) {
    if (p.scores.size() != m || p.gold.size() != m) {
      throw DimensionError("prediction '" + p.id + "' has " + std::to_string(p.scores.size()) +
                           " scores and " + std::to_string(p.gold.size()) +
                           " gold entries, expected " + std::to_string(m));
    }
  }
  return m;
}

}  // namespace

std::vector<LabelCounts> confusion_counts(std::span<const Prediction> preds, double threshold) {
  if (!(threshold > 0 && threshold < 1)) {
    throw ConfigError("threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  std::vector<LabelCounts> counts(label_count(preds));
  for (const auto& p : preds) {
    for (std::size_t l = 0; l < counts.size(); ++l) {
      const bool hit = p.scores[l] >= threshold;
      auto& c = counts[l];
      if (p.gold[l]) {
        (hit ? c.tp : c.fn) += 1;
      } else {
        (hit ? c.fp : c.tn) += 1;
      }
    }
  }
  return counts;
}

PrfScores macro_micro_prf(std::span<const LabelCounts> counts) {
  PrfScores s;
  long tp = 0, fp = 0, fn = 0;
  for (const auto& c : counts) {
    const double p = ratio(c.tp, c.tp + c.fp);
    const double r = ratio(c.tp, c.tp + c.fn);
    s.macro_precision += p;
    s.macro_recall += r;
    s.macro_f1 += f1(p, r);
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
  }
  if (!counts.empty()) {
    const auto m = static_cast<double>(counts.size());
    s.macro_precision /= m;
    s.macro_recall /= m;
    s.macro_f1 /= m;
  }
  s.micro_precision = ratio(tp, tp + fp);
  s.micro_recall = ratio(tp, tp + fn);
  s.micro_f1 = f1(s.micro_precision, s.micro_recall);
  return s;
}

std::optional<double> binary_auc(std::span<const double> scores,
                                 std::span<const std::uint8_t> gold) {
  if (scores.size() != gold.size()) throw DimensionError("binary_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mid-ranks (1-based) so tied pairs count one half.
  double positive_rank_sum = 0;
  double positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (gold[order[t]]) {
        positive_rank_sum += mid;
        positives += 1;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  return (positive_rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
}

AucScores auc_roc(std::span<const Prediction> preds) {
  if (preds.empty()) throw DataError("auc_roc: no documents");
  const std::size_t m = label_count(preds);
  AucScores out;
  double total = 0;
  std::vector<double> column(preds.size());
  std::vector<std::uint8_t> gold(preds.size());
  std::vector<double> pooled_scores;
  std::vector<std::uint8_t> pooled_gold;
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t d = 0; d < preds.size(); ++d) {
      column[d] = preds[d].scores[l];
      gold[d] = preds[d].gold[l];
    }
    pooled_scores.insert(pooled_scores.end(), column.begin(), column.end());
    pooled_gold.insert(pooled_gold.end(), gold.begin(), gold.end());
    if (auto a = binary_auc(column, gold)) {
      total += *a;
      ++out.labels_used;
    } else {
      ++out.labels_skipped;
    }
  }
  if (out.labels_used > 0) out.macro = total / out.labels_used;
  out.micro = binary_auc(pooled_scores, pooled_gold);
  return out;
}

double precision_at_k(std::span<const Prediction> preds, int k) {
  if (k <= 0) throw ConfigError("precision_at_k: k must be positive, got " + std::to_string(k));
  const std::size_t m = label_count(preds);
  if (preds.empty()) return 0.0;
  if (static_cast<std::size_t>(k) > m) {
    throw ConfigError("precision_at_k: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(m) + " labels");
  }
  double total = 0;
  std::vector<std::size_t> order(m);
  for (const auto& p : preds) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
      return p.scores[a] != p.scores[b] ? p.scores[a] > p.scores[b] : a < b;
    });
    int hits = 0;
    for (int i = 0; i < k; ++i) hits += p.gold[order[static_cast<std::size_t>(i)]] ? 1 : 0;
    total += static_cast<double>(hits) / k;
  }
  return total / static_cast<double>(preds.size());
}

std::string BinScores::range() const {
  return (lower_inclusive ? "[" : "(") + std::to_string(lower) + "," +
         (upper ? std::to_string(*upper) + "]" : std::string("inf)"));
}

std::vector<BinScores> frequency_binned_f1(std::span<const Prediction> preds,
                                           const LabelSpace& labels,
                                           std::span<const int> edges, double threshold) {
  if (edges.empty()) throw ConfigError("frequency bins need at least one edge");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw ConfigError("frequency bin edges must be strictly ascending");
  }
  const auto counts = confusion_counts(preds, threshold);
  if (!preds.empty() && counts.size() != static_cast<std::size_t>(labels.size())) {
    throw DimensionError("frequency_binned_f1: predictions cover " + std::to_string(counts.size()) +
                         " labels, label space has " + std::to_string(labels.size()));
  }
  std::vector<BinScores> bins(edges.size());
  std::vector<std::vector<LabelCounts>> members(edges.size());
  for (std::size_t b = 0; b < edges.size(); ++b) {
    bins[b].lower = edges[b];
    bins[b].lower_inclusive = b == 0;
    if (b + 1 < edges.size()) bins[b].upper = edges[b + 1];
  }
  for (int l = 0; l < labels.size(); ++l) {
    const int f = labels.frequency(l);
    if (f < edges[0]) {
      throw DataError("label '" + labels.code(l) + "' has training frequency " + std::to_string(f) +
                      ", below the first bin edge " + std::to_string(edges[0]));
    }
    // First bin is closed on the left; later bins own (edge_b, edge_b+1].
    std::size_t b = 0;
    while (b + 1 < edges.size() && f > edges[b + 1]) ++b;
    ++bins[b].labels;
    if (!counts.empty()) members[b].push_back(counts[static_cast<std::size_t>(l)]);
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const auto s = macro_micro_prf(members[b]);
    bins[b].macro_f1 = s.macro_f1;
    bins[b].micro_f1 = s.micro_f1;
    for (const auto& c : members[b]) bins[b].tp += c.tp;
  }
  return bins;
}

MetricsReport evaluate_predictions(std::span<const Prediction> preds, const LabelSpace& labels,
                                   std::span<const int> ks, std::span<const int> bin_edges,
                                   double threshold) {
  if (preds.empty()) throw DataError("no predictions to evaluate");
  MetricsReport r;
  r.documents = static_cast<int>(preds.size());
  r.labels = static_cast<int>(label_count(preds));
  r.threshold = threshold;
  const auto counts = confusion_counts(preds, threshold);
  r.prf = macro_micro_prf(counts);
  for (const auto& c : counts) r.labels_without_positives += c.tp + c.fn == 0 ? 1 : 0;
  r.auc = auc_roc(preds);
  for (int k : ks) r.p_at_k[k] = precision_at_k(preds, k);
  if (!bin_edges.empty()) r.bins = frequency_binned_f1(preds, labels, bin_edges, threshold);
  return r;
}

nlohmann::json bins_to_json(std::span<const BinScores> bins) {
  auto out = nlohmann::json::array();
  for (const auto& b : bins) {
    out.push_back({{"range", b.range()},
                   {"lower", b.lower},
                   {"upper", b.upper ? nlohmann::json(*b.upper) : nlohmann::json(nullptr)},
                   {"labels", b.labels},
                   {"tp", b.tp},
                   {"macro_f1", b.macro_f1},
                   {"micro_f1", b.micro_f1}});
  }
  return out;
}

nlohmann::json to_json(const MetricsReport& r) {
  auto optional = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json pk = nlohmann::json::object();
  for (const auto& [k, v] : r.p_at_k) pk[std::to_string(k)] = v;
  return {{"documents", r.documents},
          {"labels", r.labels},
          {"threshold", r.threshold},
          {"macro_precision", r.prf.macro_precision},
          {"macro_recall", r.prf.macro_recall},
          {"macro_f1", r.prf.macro_f1},
          {"micro_precision", r.prf.micro_precision},
          {"micro_recall", r.prf.micro_recall},
          {"micro_f1", r.prf.micro_f1},
          {"macro_auc", optional(r.auc.macro)},
          {"micro_auc", optional(r.auc.micro)},
          {"auc_labels_skipped", r.auc.labels_skipped},
          {"labels_without_positives", r.labels_without_positives},
          {"p_at_k", pk},
          {"bins", bins_to_json(r.bins)}};
}

void write_predictions(const std::filesystem::path& path, std::span<const Prediction> preds,
                       const LabelSpace& labels) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : preds) {
    std::vector<std::string> gold;
    for (std::size_t l = 0; l < p.gold.size(); ++l) {
      if (p.gold[l]) gold.push_back(labels.code(static_cast<int>(l)));
    }
    out << nlohmann::json{{"id", p.id}, {"scores", p.scores}, {"gold", gold}}.dump() << '\n';
  }
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path, const LabelSpace& labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Prediction> preds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      p.scores = j.at("scores").get<std::vector<double>>();
      std::set<std::string> gold;
      for (const auto& g : j.at("gold")) gold.insert(g.get<std::string>());
      p.gold = labels.encode(gold);
      if (p.scores.size() != p.gold.size()) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(labels.size()) + " scores");
      }
      preds.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return preds;
}

}  // namespace medcode
