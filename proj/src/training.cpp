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
#include "medcode/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "medcode/errors.hpp"
#include "medcode/random.hpp"

namespace medcode {

std::vector<Example> encode_examples(std::span<const Document> docs, const Vocabulary& vocab,
                                     const LabelSpace& labels, int max_len) {
  std::vector<Example> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    out.push_back({d.id, encode_and_truncate(d, vocab, max_len), labels.encode(d.labels)});
  }
  return out;
}

namespace {

template <typename Scalar>
Var<Scalar> summed_loss(const Model<Scalar>& model, Tape<Scalar>& tape,
                        std::span<const Example* const> batch) {
  Var<Scalar> total;
  std::vector<Scalar> y;
  for (const Example* ex : batch) {
    y.assign(ex->gold.begin(), ex->gold.end());
    Var<Scalar> probs = model.forward(tape, ex->ids);
    if (probs.cols() != static_cast<Index>(y.size())) {
      throw DimensionError("example '" + ex->id + "' has " + std::to_string(y.size()) +
                           " gold labels for a " + std::to_string(probs.cols()) + "-label model");
    }
    Var<Scalar> l = bce_loss(probs, std::span<const Scalar>(y));
    total = total.valid() ? add(total, l) : l;
  }
  return total;
}

template <typename Scalar>
void adam_update(std::span<Parameter<Scalar>* const> params, std::span<const double> lrs,
                 OptimizerState<Scalar>& state, bool decoupled) {
  if (lrs.size() != params.size()) {
    throw DimensionError("optimizer: " + std::to_string(lrs.size()) + " learning rates for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (const auto* p : params) {
    if (!p->frozen && !p->grad.allFinite()) {
      throw NumericError("optimizer: non-finite gradient in " + p->name);
    }
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw DimensionError("optimizer: state/parameter mismatch");
  ++state.step;
  const auto& c = state.config;
  const Scalar b1 = static_cast<Scalar>(c.beta1);
  const Scalar b2 = static_cast<Scalar>(c.beta2);
  const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, static_cast<double>(state.step)));
  const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, static_cast<double>(state.step)));
  const Scalar eps = static_cast<Scalar>(c.eps);
  const Scalar wd = static_cast<Scalar>(c.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.frozen) continue;
    const Scalar lr = static_cast<Scalar>(lrs[i]);
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw DimensionError("optimizer: moment shape changed for " + p.name);
    }
    Matrix<Scalar> g = p.grad;
    if (wd != 0 && !decoupled) g += wd * p.value;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    Matrix<Scalar> update =
        ((m.array() / c1) / ((v.array() / c2).sqrt() + eps)).matrix();
    if (wd != 0 && decoupled) p.value -= (lr * wd) * p.value;
    p.value -= lr * update;
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> batch_loss(const Model<Scalar>& model, Tape<Scalar>& tape,
                       std::span<const Example* const> batch) {
  if (batch.empty()) throw DataError("batch_loss: empty batch");
  return scale(summed_loss(model, tape, batch), Scalar(1) / static_cast<Scalar>(batch.size()));
}

template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, std::span<const double> lrs,
               OptimizerState<Scalar>& state) {
  adam_update(params, lrs, state, false);
}

template <typename Scalar>
void adamw_step(std::span<Parameter<Scalar>* const> params, std::span<const double> lrs,
                OptimizerState<Scalar>& state) {
  adam_update(params, lrs, state, true);
}

double lr_at(long step, double base, long warmup, long total) {
  if (step < 0) throw ConfigError("lr_at: negative step");
  if (step < warmup) return base * static_cast<double>(step) / static_cast<double>(warmup);
  if (step >= total) return step == total && total == warmup ? base : 0.0;
  return base * static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

double layerwise_lr(double base, int depth, double gamma) {
  if (!(gamma > 0 && gamma <= 1)) {
    throw ConfigError("layer-wise decay must lie in (0, 1], got " + std::to_string(gamma));
  }
  if (depth < 0) throw ConfigError("layer depth must be >= 0");
  return base * std::pow(gamma, depth);
}

template <typename Scalar>
double clip_grad_norm(std::span<Parameter<Scalar>* const> params, double max_norm) {
  double sq = 0;
  for (const auto* p : params) {
    if (!p->frozen) sq += p->grad.template cast<double>().squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const auto f = static_cast<Scalar>(max_norm / norm);
    for (auto* p : params) {
      if (!p->frozen) p->grad *= f;
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (accumulation < 1) throw ConfigError("train.accumulation must be >= 1");
  if (!(lr >= 0 && lr <= 1)) throw ConfigError("train.lr must lie in [0, 1], got " + std::to_string(lr));
  if (weight_decay < 0) throw ConfigError("train.weight_decay must be >= 0");
  if (warmup_steps < 0 || total_steps < 0) throw ConfigError("train.warmup_steps/total_steps must be >= 0");
  if (total_steps > 0 && warmup_steps > total_steps) {
    throw ConfigError("train.warmup_steps exceeds train.total_steps");
  }
  if (!(warmup_ratio >= 0 && warmup_ratio <= 1)) throw ConfigError("train.warmup_ratio must lie in [0, 1]");
  if (!(layerwise_decay > 0 && layerwise_decay <= 1)) {
    throw ConfigError("train.layerwise_decay must lie in (0, 1]");
  }
  if (clip_norm < 0) throw ConfigError("train.clip_norm must be >= 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (patience < 0) throw ConfigError("train.patience must be >= 0");
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("train.threshold must lie in (0, 1)");
  static const char* metrics[] = {"micro_f1", "macro_f1", "micro_auc", "macro_auc"};
  if (std::none_of(std::begin(metrics), std::end(metrics),
                   [&](const char* m) { return selection_metric == m; })) {
    throw ConfigError("train.selection_metric '" + selection_metric +
                      "' (expected micro_f1, macro_f1, micro_auc or macro_auc)");
  }
}

TrainConfig default_train_config(ModelKind kind) {
  TrainConfig c;
  if (is_encoder(kind)) {
    c.optimizer = OptimizerKind::AdamW;
    c.schedule = Schedule::WarmupLinear;
    c.lr = 1e-3;
    c.weight_decay = 0.01;
    c.warmup_ratio = 0.1;
    c.layerwise_decay = 0.95;
    c.clip_norm = 1.0;
  } else {
    c.optimizer = OptimizerKind::Adam;
    c.schedule = Schedule::Constant;
    c.lr = 0.003;
    c.weight_decay = 0.0;
    c.clip_norm = 0.0;
  }
  return c;
}

nlohmann::json to_json(const EpochRecord& r) {
  auto optional = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"dev_micro_f1", r.dev_micro_f1},
          {"dev_macro_f1", r.dev_macro_f1},
          {"dev_micro_auc", optional(r.dev_micro_auc)},
          {"dev_macro_auc", optional(r.dev_macro_auc)},
          {"selection_value", r.selection_value},
          {"steps", r.steps},
          {"lr", r.lr},
          {"improved", r.improved}};
}

template <typename Scalar>
std::vector<Prediction> predict_all(const Model<Scalar>& model, std::span<const Example> examples) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    const Matrix<Scalar> p = predict(model, ex.ids);
    Prediction pr;
    pr.id = ex.id;
    pr.scores.assign(p.data(), p.data() + p.size());
    pr.gold = ex.gold;
    out.push_back(std::move(pr));
  }
  return out;
}

template <typename Scalar>
TrainResult train(Model<Scalar>& model, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw DataError("train: empty training set");

  auto params = model.parameters();
  auto snapshot = [&] {
    std::vector<Matrix<Scalar>> values;
    for (const auto* p : params) values.push_back(p->value);
    return values;
  };
  auto restore = [&](const std::vector<Matrix<Scalar>>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
  };

  const std::size_t n = train_set.size();
  const std::size_t docs_per_step =
      static_cast<std::size_t>(config.batch_size) * static_cast<std::size_t>(config.accumulation);
  const long steps_per_epoch = static_cast<long>((n + docs_per_step - 1) / docs_per_step);
  const long total = config.total_steps > 0 ? config.total_steps : steps_per_epoch * config.epochs;
  const long warmup = config.warmup_steps > 0
                          ? config.warmup_steps
                          : static_cast<long>(std::llround(config.warmup_ratio * static_cast<double>(total)));

  OptimizerState<Scalar> state;
  state.config.weight_decay = config.weight_decay;
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  const std::uint64_t dropout_seed = derive_seed(config.seed, "dropout");

  TrainResult result;
  auto best = snapshot();
  double best_value = -std::numeric_limits<double>::infinity();
  int stale = 0;
  long step = 0;
  std::uint64_t micro_batches = 0;
  std::vector<std::size_t> order(n);
  std::vector<double> lrs(params.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0;
    double base_lr = 0;
    try {
      for (std::size_t start = 0; start < n; start += docs_per_step) {
        const std::size_t end = std::min(n, start + docs_per_step);
        const auto step_docs = static_cast<Scalar>(end - start);
        for (auto* p : params) p->zero_grad();
        for (std::size_t b = start; b < end; b += static_cast<std::size_t>(config.batch_size)) {
          std::vector<const Example*> batch;
          for (std::size_t i = b; i < std::min(end, b + static_cast<std::size_t>(config.batch_size)); ++i) {
            batch.push_back(&train_set[order[i]]);
          }
          Tape<Scalar> tape(true, true, splitmix64(dropout_seed + micro_batches++));
          Var<Scalar> loss = scale(summed_loss(model, tape, batch), Scalar(1) / step_docs);
          if (!std::isfinite(static_cast<double>(loss.item()))) {
            throw NumericError("non-finite training loss at step " + std::to_string(step));
          }
          loss_sum += static_cast<double>(loss.item()) * static_cast<double>(step_docs);
          tape.backward(loss);
        }
        if (config.clip_norm > 0) clip_grad_norm<Scalar>(params, config.clip_norm);
        base_lr = config.schedule == Schedule::Constant ? config.lr
                                                        : lr_at(step, config.lr, warmup, total);
        for (std::size_t i = 0; i < params.size(); ++i) {
          lrs[i] = layerwise_lr(base_lr, params[i]->depth, config.layerwise_decay);
        }
        if (config.optimizer == OptimizerKind::Adam) {
          adam_step<Scalar>(params, lrs, state);
        } else {
          adamw_step<Scalar>(params, lrs, state);
        }
        ++step;
      }
      for (const auto* p : params) {
        if (!p->value.allFinite()) throw NumericError("non-finite parameter " + p->name);
      }
    } catch (const NumericError& e) {
      result.aborted = e.what();
      restore(best);
      return result;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.steps = step;
    rec.lr = base_lr;
    if (!dev_set.empty()) {
      const auto preds = predict_all(model, dev_set);
      const auto prf = macro_micro_prf(confusion_counts(preds, config.threshold));
      const auto auc = auc_roc(preds);
      rec.dev_micro_f1 = prf.micro_f1;
      rec.dev_macro_f1 = prf.macro_f1;
      rec.dev_micro_auc = auc.micro;
      rec.dev_macro_auc = auc.macro;
      const auto& m = config.selection_metric;
      if (m == "micro_f1") rec.selection_value = prf.micro_f1;
      if (m == "macro_f1") rec.selection_value = prf.macro_f1;
      if (m == "micro_auc") rec.selection_value = auc.micro.value_or(0.0);
      if (m == "macro_auc") rec.selection_value = auc.macro.value_or(0.0);
    } else {
      rec.selection_value = -rec.train_loss;
    }
    rec.improved = rec.selection_value > best_value;
    if (rec.improved) {
      best_value = rec.selection_value;
      best = snapshot();
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (config.patience > 0 && stale >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  restore(best);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'C', 'K', 'P'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            path_ + ": truncated while reading " + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::string str(std::uint32_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32("parameter data")); }
  bool done() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
  std::string path_;
};

struct StoredParam {
  std::uint32_t rows, cols;
  std::vector<float> data;
};

struct CheckpointContents {
  ModelSpec spec;
  std::vector<std::string> order;
  std::map<std::string, StoredParam> params;
};

CheckpointContents read_contents(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::Missing, "checkpoint not found: " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());
  if (r.str(4, "magic") != std::string(kMagic, 4)) {
    throw CheckpointError(CheckpointError::Kind::BadMagic, path.string() + ": not a checkpoint file");
  }
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::Version,
                          path.string() + ": checkpoint version " + std::to_string(version) +
                              ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  CheckpointContents c;
  const std::string spec_text = r.str(r.u32("spec length"), "model spec");
  try {
    c.spec = model_spec_from_json(nlohmann::json::parse(spec_text));
  } catch (const std::exception&) {
    throw CheckpointError(CheckpointError::Kind::Truncated, path.string() + ": corrupt model spec");
  }
  const auto count = r.u32("parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32("name length"), "parameter name");
    StoredParam p;
    p.rows = r.u32("rows");
    p.cols = r.u32("cols");
    const std::uint64_t size = static_cast<std::uint64_t>(p.rows) * p.cols;
    r.need(static_cast<std::size_t>(std::min<std::uint64_t>(size * 4, std::numeric_limits<std::size_t>::max())),
           "parameter data");
    p.data.resize(static_cast<std::size_t>(size));
    for (auto& f : p.data) f = r.f32();
    c.order.push_back(name);
    c.params.emplace(std::move(name), std::move(p));
  }
  if (!r.done()) {
    throw CheckpointError(CheckpointError::Kind::Truncated,
                          path.string() + ": unexpected bytes after the last parameter");
  }
  return c;
}

template <typename Scalar>
void fill_model(Model<Scalar>& model, const CheckpointContents& c, const std::string& path) {
  auto params = model.parameters();
  if (c.params.size() != params.size()) {
    throw CheckpointError(CheckpointError::Kind::Shape,
                          path + ": holds " + std::to_string(c.params.size()) +
                              " parameters, model expects " + std::to_string(params.size()));
  }
  for (auto* p : params) {
    auto it = c.params.find(p->name);
    if (it == c.params.end()) {
      throw CheckpointError(CheckpointError::Kind::Missing, path + ": no parameter " + p->name);
    }
    const auto& s = it->second;
    if (static_cast<Index>(s.rows) != p->value.rows() || static_cast<Index>(s.cols) != p->value.cols()) {
      throw CheckpointError(CheckpointError::Kind::Shape,
                            path + ": " + p->name + " is " + shape_string(s.rows, s.cols) +
                                ", model expects " + shape_string(p->value));
    }
  }
  for (auto* p : params) {
    const auto& s = c.params.at(p->name);
    for (std::size_t i = 0; i < s.data.size(); ++i) {
      p->value.data()[i] = static_cast<Scalar>(s.data[i]);
    }
  }
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const Model<Scalar>& model, const std::filesystem::path& path) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const std::string spec = to_json(model.spec()).dump();
  put_u32(out, static_cast<std::uint32_t>(spec.size()));
  out += spec;
  const auto params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Index i = 0; i < p->value.size(); ++i) put_f32(out, static_cast<float>(p->value.data()[i]));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

ModelSpec read_checkpoint_spec(const std::filesystem::path& path) {
  return read_contents(path).spec;
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> load_checkpoint(const std::filesystem::path& path) {
  const auto c = read_contents(path);
  auto model = make_model<Scalar>(c.spec, 0);
  fill_model(*model, c, path.string());
  return model;
}

template <typename Scalar>
void load_checkpoint_into(Model<Scalar>& model, const std::filesystem::path& path) {
  fill_model(model, read_contents(path), path.string());
}

#define MEDCODE_INSTANTIATE_TRAINING(S)                                                         \
  template Var<S> batch_loss(const Model<S>&, Tape<S>&, std::span<const Example* const>);       \
  template void adam_step(std::span<Parameter<S>* const>, std::span<const double>,              \
                          OptimizerState<S>&);                                                  \
  template void adamw_step(std::span<Parameter<S>* const>, std::span<const double>,             \
                           OptimizerState<S>&);                                                 \
  template double clip_grad_norm(std::span<Parameter<S>* const>, double);                       \
  template TrainResult train(Model<S>&, std::span<const Example>, std::span<const Example>,     \
                             const TrainConfig&, const EpochCallback&);                         \
  template std::vector<Prediction> predict_all(const Model<S>&, std::span<const Example>);      \
  template void save_checkpoint(const Model<S>&, const std::filesystem::path&);                 \
  template std::unique_ptr<Model<S>> load_checkpoint(const std::filesystem::path&);             \
  template void load_checkpoint_into(Model<S>&, const std::filesystem::path&);

MEDCODE_INSTANTIATE_TRAINING(float)
MEDCODE_INSTANTIATE_TRAINING(double)

#undef MEDCODE_INSTANTIATE_TRAINING

}  // namespace medcode
