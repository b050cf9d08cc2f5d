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

// Document classifiers: truncated and hierarchical transformer encoders with
// FCN or label-attention heads, and the CNN / CAML convolutional baselines.
// Every model maps one document's token ids to per-label probabilities
// [1 x m] on a tape.

#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medcode/ops.hpp"
#include "medcode/tensor.hpp"

namespace medcode {

enum class ModelKind { Cnn, Caml, TruncFcn, TruncLan, HierFcn, HierLan };

std::string to_string(ModelKind kind);
/// Accepts cnn, caml, trunc_fcn, trunc_lan, hier_fcn, hier_lan.
ModelKind parse_model_kind(const std::string& name);
bool is_encoder(ModelKind kind);
bool uses_label_attention(ModelKind kind);

struct EncoderConfig {
  int hidden = 128;
  int layers = 2;
  int heads = 4;
  int ff = 256;
  int max_positions = 512;
  double dropout = 0.1;
  /// Segment length including its SEG token.
  int seg_len = 512;
  int max_total = 2500;
  int top_layers = 2;

  void validate() const;
  /// Upper bound on segments produced for max_total content tokens.
  int max_segments() const;
};

struct CnnConfig {
  int embedding_dim = 100;
  int kernel = 4;
  int filters = 500;
  double dropout = 0.2;
  bool static_embeddings = true;
  /// Tokens consumed per document.
  int max_length = 2500;

  void validate() const;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Cnn;
  int vocab_size = 0;
  int num_labels = 0;
  EncoderConfig encoder;
  CnnConfig cnn;

  void validate() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Heads.

template <typename Scalar>
struct LabelAttentionResult {
  /// [m x h]; row l is label l's attentive document vector.
  Var<Scalar> v;
  /// [n x m]; column l is label l's distribution over token positions.
  Var<Scalar> a;
};

/// A = softmax over the token axis of H·U, V = Aᵀ·H. keep (empty = all)
/// excludes positions; masking every position is a DimensionError.
template <typename Scalar>
LabelAttentionResult<Scalar> label_attention(Var<Scalar> h, Var<Scalar> u,
                                             std::span<const bool> keep = {});

/// sigmoid(w_l · v_l + b_l) per label. v, w: [m x h]; b: [1 x m].
template <typename Scalar>
Var<Scalar> classify_from_v(Var<Scalar> v, Var<Scalar> w, Var<Scalar> b);

/// sigmoid(C·W + b). c: [1 x h]; w: [h x m]; b: [1 x m].
template <typename Scalar>
Var<Scalar> fcn_classify(Var<Scalar> c, Var<Scalar> w, Var<Scalar> b);

// ---------------------------------------------------------------------------

/// Owns parameters at stable addresses, in registration order.
template <typename Scalar>
class ParameterSet {
 public:
  Parameter<Scalar>& add(std::string name, Matrix<Scalar> value, int depth,
                         bool frozen = false);
  std::vector<Parameter<Scalar>*> all();
  std::vector<const Parameter<Scalar>*> all() const;
  Parameter<Scalar>* find(const std::string& name);

 private:
  std::deque<Parameter<Scalar>> params_;
};

/// Optional forward-pass diagnostics.
template <typename Scalar>
struct ForwardTrace {
  /// [positions x m] label attention, empty for FCN and CNN heads.
  Matrix<Scalar> label_attention;
  /// Token ids actually read, per segment (one entry for flat models).
  std::vector<std::vector<int>> inputs;
  /// Rows of the token-state matrix the head attends over.
  Index positions = 0;
};

template <typename Scalar>
struct EncoderOutput {
  /// [n x h] last-layer token states.
  Var<Scalar> states;
  /// [1 x h] state at position 0.
  Var<Scalar> pooled;
};

/// Transformer stack over learned token + position embeddings.
template <typename Scalar>
class TransformerEncoder {
 public:
  struct Layer {
    Parameter<Scalar>* wq;
    Parameter<Scalar>* bq;
    Parameter<Scalar>* wk;
    Parameter<Scalar>* bk;
    Parameter<Scalar>* wv;
    Parameter<Scalar>* bv;
    Parameter<Scalar>* wo;
    Parameter<Scalar>* bo;
    Parameter<Scalar>* ln1_gain;
    Parameter<Scalar>* ln1_bias;
    Parameter<Scalar>* ff1_w;
    Parameter<Scalar>* ff1_b;
    Parameter<Scalar>* ff2_w;
    Parameter<Scalar>* ff2_b;
    Parameter<Scalar>* ln2_gain;
    Parameter<Scalar>* ln2_bias;
  };

  /// Registers "<prefix>.*" parameters. Layer i gets depth
  /// base_depth + (layers - i); the embeddings get base_depth + layers + 1.
  /// When vocab_size is 0 no token embedding is created and forward_rows
  /// is the only entry point.
  TransformerEncoder(ParameterSet<Scalar>& params, const std::string& prefix,
                     int vocab_size, int max_positions, int layers,
                     const EncoderConfig& config, int base_depth, Rng& rng);

  /// Embeds ids (n <= max_positions) and runs the stack.
  EncoderOutput<Scalar> forward(Tape<Scalar>& tape, std::span<const int> ids) const;
  /// Adds position embeddings to precomputed rows [n x h] and runs the stack.
  EncoderOutput<Scalar> forward_rows(Var<Scalar> rows) const;

 private:
  EncoderConfig config_;
  int max_positions_;
  Parameter<Scalar>* tokens_ = nullptr;
  Parameter<Scalar>* positions_ = nullptr;
  Parameter<Scalar>* ln_gain_ = nullptr;
  Parameter<Scalar>* ln_bias_ = nullptr;
  std::vector<Layer> layers_;
};

template <typename Scalar>
class Model {
 public:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {}
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }

  /// Probabilities [1 x m] for one document. Each model truncates ids to
  /// its own input budget (max_input_length()).
  virtual Var<Scalar> forward(Tape<Scalar>& tape, std::span<const int> ids,
                              ForwardTrace<Scalar>* trace = nullptr) const = 0;
  virtual int max_input_length() const = 0;

  std::vector<Parameter<Scalar>*> parameters() { return params_.all(); }
  std::vector<const Parameter<Scalar>*> parameters() const { return params_.all(); }
  Parameter<Scalar>* find_parameter(const std::string& name) { return params_.find(name); }
  Index parameter_count() const;
  Index trainable_parameter_count() const;

 protected:
  ModelSpec spec_;
  ParameterSet<Scalar> params_;
};

/// Builds a freshly initialised model (Xavier-uniform projections,
/// N(0, 0.02) embeddings) from the init seed.
template <typename Scalar>
std::unique_ptr<Model<Scalar>> make_model(const ModelSpec& spec, std::uint64_t seed);

/// Installs pretrained word vectors into a CNN/CAML embedding table.
template <typename Scalar>
void set_word_embeddings(Model<Scalar>& model, const Matrix<double>& table);

/// Evaluation-mode probabilities for one document.
template <typename Scalar>
Matrix<Scalar> predict(const Model<Scalar>& model, std::span<const int> ids,
                       ForwardTrace<Scalar>* trace = nullptr);

/// Copies every parameter value across scalar types (same spec required).
template <typename To, typename From>
void copy_parameters(const Model<From>& from, Model<To>& to);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace medcode
