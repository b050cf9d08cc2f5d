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

// BCE objective, Adam / AdamW, warmup-linear schedule, the epoch loop with
// dev-based model selection, and the binary checkpoint format.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medcode/evaluation.hpp"
#include "medcode/models.hpp"
#include "medcode/text.hpp"

namespace medcode {

/// A document as the models consume it.
struct Example {
  std::string id;
  std::vector<int> ids;
  std::vector<std::uint8_t> gold;
};

std::vector<Example> encode_examples(std::span<const Document> docs, const Vocabulary& vocab,
                                     const LabelSpace& labels, int max_len);

/// Mean over the batch of per-document BCE summed over labels.
template <typename Scalar>
Var<Scalar> batch_loss(const Model<Scalar>& model, Tape<Scalar>& tape,
                       std::span<const Example* const> batch);

// ---------------------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

template <typename Scalar>
struct OptimizerState {
  AdamConfig config;
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  long step = 0;
};

/// Adam with bias correction; weight_decay adds an L2 term to the gradient.
/// lrs holds one learning rate per parameter. Frozen parameters are skipped.
/// A non-finite gradient throws NumericError before anything is updated.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, std::span<const double> lrs,
               OptimizerState<Scalar>& state);

/// Adam with weight decay applied to the parameters directly.
template <typename Scalar>
void adamw_step(std::span<Parameter<Scalar>* const> params, std::span<const double> lrs,
                OptimizerState<Scalar>& state);

/// Linear 0 -> base over [0, warmup), base -> 0 over [warmup, total], 0 after.
double lr_at(long step, double base, long warmup, long total);

/// base * gamma^depth.
double layerwise_lr(double base, int depth, double gamma);

/// Scales gradients so their global L2 norm is at most max_norm. Returns
/// the norm before clipping.
template <typename Scalar>
double clip_grad_norm(std::span<Parameter<Scalar>* const> params, double max_norm);

// ---------------------------------------------------------------------------

enum class OptimizerKind { Adam, AdamW };
enum class Schedule { Constant, WarmupLinear };

struct TrainConfig {
  int batch_size = 8;
  /// Batches accumulated into one optimizer step.
  int accumulation = 1;
  double lr = 1e-3;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  Schedule schedule = Schedule::WarmupLinear;
  double weight_decay = 0.01;
  long warmup_steps = 0;
  /// Used when warmup_steps is 0: warmup = round(ratio * total).
  double warmup_ratio = 0.0;
  /// 0 derives epochs * steps-per-epoch.
  long total_steps = 0;
  double layerwise_decay = 1.0;
  /// 0 disables clipping.
  double clip_norm = 1.0;
  int epochs = 10;
  /// Epochs without strict dev improvement before stopping; 0 never stops.
  int patience = 3;
  /// micro_f1, macro_f1, micro_auc or macro_auc on dev.
  std::string selection_metric = "micro_f1";
  double threshold = 0.5;
  std::uint64_t seed = 42;

  void validate() const;
};

/// The recipe for a model kind: Adam at 0.003, constant rate and no
/// clipping for CNN/CAML; AdamW with warmup-linear decay and clipping at
/// 1.0 for encoders.
TrainConfig default_train_config(ModelKind kind);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double dev_micro_f1 = 0;
  double dev_macro_f1 = 0;
  std::optional<double> dev_micro_auc;
  std::optional<double> dev_macro_auc;
  double selection_value = 0;
  long steps = 0;
  double lr = 0;
  bool improved = false;
};

nlohmann::json to_json(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool stopped_early = false;
  /// Set when a non-finite loss or gradient ended training; the model then
  /// holds the best parameters seen so far.
  std::optional<std::string> aborted;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains in place and leaves the model at its best dev epoch.
template <typename Scalar>
TrainResult train(Model<Scalar>& model, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Evaluation-mode scores for every example.
template <typename Scalar>
std::vector<Prediction> predict_all(const Model<Scalar>& model, std::span<const Example> examples);

// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "MCKP", u32 version, u32 length + model spec JSON, u32 parameter count,
/// then per parameter: u32 length + name, u32 rows, u32 cols, float32 data.
/// All integers and floats little-endian.
template <typename Scalar>
void save_checkpoint(const Model<Scalar>& model, const std::filesystem::path& path);

/// Rebuilds the model recorded in the checkpoint.
template <typename Scalar>
std::unique_ptr<Model<Scalar>> load_checkpoint(const std::filesystem::path& path);

/// Loads into an existing model; any name or shape disagreement throws
/// CheckpointError.
template <typename Scalar>
void load_checkpoint_into(Model<Scalar>& model, const std::filesystem::path& path);

ModelSpec read_checkpoint_spec(const std::filesystem::path& path);

}  // namespace medcode
