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
#include "medcode/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "medcode/errors.hpp"
#include "medcode/text.hpp"

namespace medcode {
namespace {

constexpr double kEmbeddingStd = 0.02;

template <typename Scalar>
Matrix<Scalar> xavier(Index rows, Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
  return m;
}

template <typename Scalar>
Matrix<Scalar> gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, kEmbeddingStd);
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(n(rng));
  return m;
}

template <typename Scalar>
Matrix<Scalar> zeros(Index rows, Index cols) {
  return Matrix<Scalar>::Zero(rows, cols);
}

template <typename Scalar>
Matrix<Scalar> ones(Index rows, Index cols) {
  return Matrix<Scalar>::Ones(rows, cols);
}

void require_positive(int value, const char* what) {
  if (value < 1) throw ConfigError(std::string(what) + " must be >= 1, got " + std::to_string(value));
}

void require_dropout(double p, const char* what) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0, 1), got " + std::to_string(p));
  }
}

template <typename Scalar>
Var<Scalar> bind(Tape<Scalar>& tape, Parameter<Scalar>* p) {
  return tape.parameter(*p);
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Caml: return "caml";
    case ModelKind::TruncFcn: return "trunc_fcn";
    case ModelKind::TruncLan: return "trunc_lan";
    case ModelKind::HierFcn: return "hier_fcn";
    case ModelKind::HierLan: return "hier_lan";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::Cnn, ModelKind::Caml, ModelKind::TruncFcn, ModelKind::TruncLan,
                 ModelKind::HierFcn, ModelKind::HierLan}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model kind '" + name +
                    "' (expected cnn, caml, trunc_fcn, trunc_lan, hier_fcn or hier_lan)");
}

bool is_encoder(ModelKind kind) {
  return kind != ModelKind::Cnn && kind != ModelKind::Caml;
}

bool uses_label_attention(ModelKind kind) {
  return kind == ModelKind::Caml || kind == ModelKind::TruncLan || kind == ModelKind::HierLan;
}

void EncoderConfig::validate() const {
  require_positive(hidden, "encoder.hidden");
  require_positive(layers, "encoder.layers");
  require_positive(heads, "encoder.heads");
  require_positive(ff, "encoder.ff");
  require_positive(top_layers, "encoder.top_layers");
  require_dropout(dropout, "encoder.dropout");
  if (hidden % heads != 0) {
    throw ConfigError("encoder.hidden " + std::to_string(hidden) +
                      " is not divisible by encoder.heads " + std::to_string(heads));
  }
  if (seg_len < 2) throw ConfigError("encoder.seg_len must be >= 2");
  if (seg_len > max_positions) {
    throw ConfigError("encoder.seg_len " + std::to_string(seg_len) +
                      " exceeds encoder.max_positions " + std::to_string(max_positions));
  }
  if (max_total < seg_len) throw ConfigError("encoder.max_total must be >= encoder.seg_len");
}

int EncoderConfig::max_segments() const {
  const int content = seg_len - 1;
  return (max_total + content - 1) / content;
}

void CnnConfig::validate() const {
  require_positive(embedding_dim, "cnn.embedding_dim");
  require_positive(kernel, "cnn.kernel");
  require_positive(filters, "cnn.filters");
  require_positive(max_length, "cnn.max_length");
  require_dropout(dropout, "cnn.dropout");
}

void ModelSpec::validate() const {
  require_positive(num_labels, "num_labels");
  if (vocab_size <= Vocabulary::kNumSpecial - 1) {
    throw ConfigError("vocab_size must cover the special tokens");
  }
  if (is_encoder(kind)) {
    encoder.validate();
  } else {
    cnn.validate();
  }
}

nlohmann::json to_json(const ModelSpec& spec) {
  const auto& e = spec.encoder;
  const auto& c = spec.cnn;
  return {{"kind", to_string(spec.kind)},
          {"vocab_size", spec.vocab_size},
          {"num_labels", spec.num_labels},
          {"encoder",
           {{"hidden", e.hidden}, {"layers", e.layers}, {"heads", e.heads}, {"ff", e.ff},
            {"max_positions", e.max_positions}, {"dropout", e.dropout},
            {"seg_len", e.seg_len}, {"max_total", e.max_total}, {"top_layers", e.top_layers}}},
          {"cnn",
           {{"embedding_dim", c.embedding_dim}, {"kernel", c.kernel}, {"filters", c.filters},
            {"dropout", c.dropout}, {"static", c.static_embeddings},
            {"max_length", c.max_length}}}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.vocab_size = j.at("vocab_size").get<int>();
    s.num_labels = j.at("num_labels").get<int>();
    const auto& e = j.at("encoder");
    s.encoder.hidden = e.at("hidden").get<int>();
    s.encoder.layers = e.at("layers").get<int>();
    s.encoder.heads = e.at("heads").get<int>();
    s.encoder.ff = e.at("ff").get<int>();
    s.encoder.max_positions = e.at("max_positions").get<int>();
    s.encoder.dropout = e.at("dropout").get<double>();
    s.encoder.seg_len = e.at("seg_len").get<int>();
    s.encoder.max_total = e.at("max_total").get<int>();
    s.encoder.top_layers = e.at("top_layers").get<int>();
    const auto& c = j.at("cnn");
    s.cnn.embedding_dim = c.at("embedding_dim").get<int>();
    s.cnn.kernel = c.at("kernel").get<int>();
    s.cnn.filters = c.at("filters").get<int>();
    s.cnn.dropout = c.at("dropout").get<double>();
    s.cnn.static_embeddings = c.at("static").get<bool>();
    s.cnn.max_length = c.at("max_length").get<int>();
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("model spec: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------

template <typename Scalar>
LabelAttentionResult<Scalar> label_attention(Var<Scalar> h, Var<Scalar> u,
                                             std::span<const bool> keep) {
  if (h.cols() != u.rows()) {
    throw DimensionError("label_attention: states " + shape_string(h.value()) +
                         " vs query " + shape_string(u.value()));
  }
  Var<Scalar> logits = matmul(h, u);
  if (!keep.empty()) {
    if (static_cast<Index>(keep.size()) != h.rows()) {
      throw DimensionError("label_attention: mask length " + std::to_string(keep.size()) +
                           " vs " + std::to_string(h.rows()) + " positions");
    }
    if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
      throw DimensionError("label_attention: every position is masked");
    }
    logits = mask_logits(logits, keep, 0);
  }
  Var<Scalar> a = softmax(logits, 0);
  return {matmul(transpose(a), h), a};
}

template <typename Scalar>
Var<Scalar> classify_from_v(Var<Scalar> v, Var<Scalar> w, Var<Scalar> b) {
  if (v.rows() != w.rows() || v.cols() != w.cols() || b.rows() != 1 || b.cols() != v.rows()) {
    throw DimensionError("classify_from_v: V " + shape_string(v.value()) + ", W " +
                         shape_string(w.value()) + ", b " + shape_string(b.value()));
  }
  return sigmoid(add(transpose(sum_axis(hadamard(v, w), 1)), b));
}

template <typename Scalar>
Var<Scalar> fcn_classify(Var<Scalar> c, Var<Scalar> w, Var<Scalar> b) {
  return sigmoid(add_row(matmul(c, w), b));
}

// ---------------------------------------------------------------------------

template <typename Scalar>
Parameter<Scalar>& ParameterSet<Scalar>::add(std::string name, Matrix<Scalar> value,
                                             int depth, bool frozen) {
  if (find(name)) throw ConfigError("duplicate parameter " + name);
  auto& p = params_.emplace_back();
  p.name = std::move(name);
  p.value = std::move(value);
  p.depth = depth;
  p.frozen = frozen;
  p.zero_grad();
  return p;
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> ParameterSet<Scalar>::all() {
  std::vector<Parameter<Scalar>*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

template <typename Scalar>
std::vector<const Parameter<Scalar>*> ParameterSet<Scalar>::all() const {
  std::vector<const Parameter<Scalar>*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

template <typename Scalar>
Parameter<Scalar>* ParameterSet<Scalar>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
TransformerEncoder<Scalar>::TransformerEncoder(ParameterSet<Scalar>& params,
                                               const std::string& prefix, int vocab_size,
                                               int max_positions, int layers,
                                               const EncoderConfig& config, int base_depth,
                                               Rng& rng)
    : config_(config), max_positions_(max_positions) {
  const Index h = config.hidden;
  const Index ff = config.ff;
  const int emb_depth = base_depth + layers + 1;
  if (vocab_size > 0) {
    tokens_ = &params.add(prefix + ".tokens", gaussian<Scalar>(vocab_size, h, rng), emb_depth);
  }
  positions_ = &params.add(prefix + ".positions", gaussian<Scalar>(max_positions, h, rng), emb_depth);
  ln_gain_ = &params.add(prefix + ".ln.gain", ones<Scalar>(1, h), emb_depth);
  ln_bias_ = &params.add(prefix + ".ln.bias", zeros<Scalar>(1, h), emb_depth);
  for (int i = 0; i < layers; ++i) {
    const std::string p = prefix + ".layer" + std::to_string(i);
    const int d = base_depth + (layers - i);
    Layer l;
    l.wq = &params.add(p + ".attn.wq", xavier<Scalar>(h, h, rng), d);
    l.bq = &params.add(p + ".attn.bq", zeros<Scalar>(1, h), d);
    l.wk = &params.add(p + ".attn.wk", xavier<Scalar>(h, h, rng), d);
    l.bk = &params.add(p + ".attn.bk", zeros<Scalar>(1, h), d);
    l.wv = &params.add(p + ".attn.wv", xavier<Scalar>(h, h, rng), d);
    l.bv = &params.add(p + ".attn.bv", zeros<Scalar>(1, h), d);
    l.wo = &params.add(p + ".attn.wo", xavier<Scalar>(h, h, rng), d);
    l.bo = &params.add(p + ".attn.bo", zeros<Scalar>(1, h), d);
    l.ln1_gain = &params.add(p + ".ln1.gain", ones<Scalar>(1, h), d);
    l.ln1_bias = &params.add(p + ".ln1.bias", zeros<Scalar>(1, h), d);
    l.ff1_w = &params.add(p + ".ff1.w", xavier<Scalar>(h, ff, rng), d);
    l.ff1_b = &params.add(p + ".ff1.b", zeros<Scalar>(1, ff), d);
    l.ff2_w = &params.add(p + ".ff2.w", xavier<Scalar>(ff, h, rng), d);
    l.ff2_b = &params.add(p + ".ff2.b", zeros<Scalar>(1, h), d);
    l.ln2_gain = &params.add(p + ".ln2.gain", ones<Scalar>(1, h), d);
    l.ln2_bias = &params.add(p + ".ln2.bias", zeros<Scalar>(1, h), d);
    layers_.push_back(l);
  }
}

template <typename Scalar>
EncoderOutput<Scalar> TransformerEncoder<Scalar>::forward(Tape<Scalar>& tape,
                                                          std::span<const int> ids) const {
  if (!tokens_) throw ConfigError("encoder has no token embedding");
  if (ids.empty()) throw DataError("encoder: empty input sequence");
  return forward_rows(embedding_lookup(bind(tape, tokens_), ids));
}

template <typename Scalar>
EncoderOutput<Scalar> TransformerEncoder<Scalar>::forward_rows(Var<Scalar> rows) const {
  const Index n = rows.rows();
  if (n > max_positions_) {
    throw DimensionError("encoder: sequence of " + std::to_string(n) + " exceeds " +
                         std::to_string(max_positions_) + " positions");
  }
  Tape<Scalar>& tape = rows.tape();
  Var<Scalar> x = add(rows, slice_rows(bind(tape, positions_), 0, n));
  x = dropout(layer_norm(x, bind(tape, ln_gain_), bind(tape, ln_bias_)), config_.dropout);
  for (const auto& l : layers_) {
    AttentionWeights<Scalar> w{bind(tape, l.wq), bind(tape, l.bq), bind(tape, l.wk),
                               bind(tape, l.bk), bind(tape, l.wv), bind(tape, l.bv),
                               bind(tape, l.wo), bind(tape, l.bo)};
    Var<Scalar> attn = multi_head_attention(x, x, x, w, config_.heads).output;
    x = layer_norm(add(x, dropout(attn, config_.dropout)), bind(tape, l.ln1_gain),
                   bind(tape, l.ln1_bias));
    Var<Scalar> f = gelu(add_row(matmul(x, bind(tape, l.ff1_w)), bind(tape, l.ff1_b)));
    f = add_row(matmul(f, bind(tape, l.ff2_w)), bind(tape, l.ff2_b));
    x = layer_norm(add(x, dropout(f, config_.dropout)), bind(tape, l.ln2_gain),
                   bind(tape, l.ln2_bias));
  }
  return {x, slice_rows(x, 0, 1)};
}

// ---------------------------------------------------------------------------

template <typename Scalar>
Index Model<Scalar>::parameter_count() const {
  Index n = 0;
  for (const auto* p : params_.all()) n += p->size();
  return n;
}

template <typename Scalar>
Index Model<Scalar>::trainable_parameter_count() const {
  Index n = 0;
  for (const auto* p : params_.all()) n += p->frozen ? 0 : p->size();
  return n;
}

namespace {

// FCN or label-attention classifier over h-dimensional states.
template <typename Scalar>
struct Head {
  Parameter<Scalar>* u = nullptr;
  Parameter<Scalar>* w = nullptr;
  Parameter<Scalar>* b = nullptr;

  Head(ParameterSet<Scalar>& params, bool attention, Index h, Index m, Rng& rng) {
    if (attention) {
      u = &params.add("head.u", xavier<Scalar>(h, m, rng), 0);
      w = &params.add("head.w", xavier<Scalar>(m, h, rng), 0);
    } else {
      w = &params.add("head.w", xavier<Scalar>(h, m, rng), 0);
    }
    b = &params.add("head.b", zeros<Scalar>(1, m), 0);
  }

  Var<Scalar> pooled(Var<Scalar> c) const {
    Tape<Scalar>& t = c.tape();
    return fcn_classify(c, bind(t, w), bind(t, b));
  }

  Var<Scalar> attend(Var<Scalar> states, ForwardTrace<Scalar>* trace) const {
    Tape<Scalar>& t = states.tape();
    auto la = label_attention(states, bind(t, u));
    if (trace) {
      trace->label_attention = la.a.value();
      trace->positions = states.rows();
    }
    return classify_from_v(la.v, bind(t, w), bind(t, b));
  }
};

template <typename Scalar>
class TruncModel final : public Model<Scalar> {
 public:
  TruncModel(const ModelSpec& spec, Rng& rng)
      : Model<Scalar>(spec),
        encoder_(this->params_, "encoder", spec.vocab_size, spec.encoder.max_positions,
                 spec.encoder.layers, spec.encoder, 0, rng),
        head_(this->params_, spec.kind == ModelKind::TruncLan, spec.encoder.hidden,
              spec.num_labels, rng) {}

  int max_input_length() const override { return this->spec_.encoder.seg_len - 1; }

  Var<Scalar> forward(Tape<Scalar>& tape, std::span<const int> ids,
                      ForwardTrace<Scalar>* trace) const override {
    if (ids.empty()) throw DataError("trunc model: empty document");
    const auto n = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(max_input_length()));
    std::vector<int> input{Vocabulary::kSeg};
    input.insert(input.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
    auto out = encoder_.forward(tape, input);
    if (trace) trace->inputs = {input};
    if (this->spec_.kind == ModelKind::TruncLan) return head_.attend(out.states, trace);
    return head_.pooled(out.pooled);
  }

 private:
  TransformerEncoder<Scalar> encoder_;
  Head<Scalar> head_;
};

template <typename Scalar>
class HierModel final : public Model<Scalar> {
 public:
  HierModel(const ModelSpec& spec, Rng& rng)
      : Model<Scalar>(spec),
        top_(this->params_, "top", 0, spec.encoder.max_segments(), spec.encoder.top_layers,
             spec.encoder, 0, rng),
        encoder_(this->params_, "encoder", spec.vocab_size, spec.encoder.max_positions,
                 spec.encoder.layers, spec.encoder, spec.encoder.top_layers + 1, rng),
        head_(this->params_, spec.kind == ModelKind::HierLan, spec.encoder.hidden,
              spec.num_labels, rng) {}

  int max_input_length() const override { return this->spec_.encoder.max_total; }

  Var<Scalar> forward(Tape<Scalar>& tape, std::span<const int> ids,
                      ForwardTrace<Scalar>* trace) const override {
    const auto& cfg = this->spec_.encoder;
    const auto segments = segment(ids, cfg.seg_len, cfg.max_total);
    std::vector<Var<Scalar>> states;
    std::vector<Var<Scalar>> pooled;
    for (const auto& s : segments) {
      auto out = encoder_.forward(tape, s);
      states.push_back(out.states);
      pooled.push_back(out.pooled);
    }
    if (trace) trace->inputs = segments;
    Var<Scalar> z = top_.forward_rows(concat_rows<Scalar>(pooled)).states;
    if (this->spec_.kind == ModelKind::HierFcn) return head_.pooled(mean_rows(z));

    // Content rows of each segment, each enriched with its segment vector.
    std::vector<Var<Scalar>> parts;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      const Index content = states[s].rows() - 1;
      if (content == 0) continue;
      parts.push_back(add_row(slice_rows(states[s], 1, content),
                              slice_rows(z, static_cast<Index>(s), 1)));
    }
    if (parts.empty()) parts.push_back(add_row(states[0], slice_rows(z, 0, 1)));
    return head_.attend(concat_rows<Scalar>(parts), trace);
  }

 private:
  TransformerEncoder<Scalar> top_;
  TransformerEncoder<Scalar> encoder_;
  Head<Scalar> head_;
};

template <typename Scalar>
class ConvModel final : public Model<Scalar> {
 public:
  ConvModel(const ModelSpec& spec, Rng& rng) : Model<Scalar>(spec), head_(make_head(spec, rng)) {}

  int max_input_length() const override { return this->spec_.cnn.max_length; }

  Var<Scalar> forward(Tape<Scalar>& tape, std::span<const int> ids,
                      ForwardTrace<Scalar>* trace) const override {
    const auto& cfg = this->spec_.cnn;
    std::vector<int> input(ids.begin(),
                           ids.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                             ids.size(), static_cast<std::size_t>(cfg.max_length))));
    if (input.empty()) input.push_back(Vocabulary::kPad);
    if (trace) trace->inputs = {input};
    Var<Scalar> x = dropout(embedding_lookup(bind(tape, words_), input), cfg.dropout);
    Var<Scalar> c = relu(conv1d(x, bind(tape, conv_w_), bind(tape, conv_b_), cfg.kernel,
                                Padding::Same));
    if (this->spec_.kind == ModelKind::Caml) return head_.attend(c, trace);
    return head_.pooled(max_pool_over_time(c));
  }

 private:
  Head<Scalar> make_head(const ModelSpec& spec, Rng& rng) {
    const auto& cfg = spec.cnn;
    words_ = &this->params_.add("embed.words",
                                gaussian<Scalar>(spec.vocab_size, cfg.embedding_dim, rng), 2,
                                cfg.static_embeddings);
    words_->value.row(Vocabulary::kPad).setZero();
    conv_w_ = &this->params_.add(
        "conv.w", xavier<Scalar>(static_cast<Index>(cfg.kernel) * cfg.embedding_dim, cfg.filters, rng), 1);
    conv_b_ = &this->params_.add("conv.b", zeros<Scalar>(1, cfg.filters), 1);
    return Head<Scalar>(this->params_, spec.kind == ModelKind::Caml, cfg.filters,
                        spec.num_labels, rng);
  }

  Parameter<Scalar>* words_ = nullptr;
  Parameter<Scalar>* conv_w_ = nullptr;
  Parameter<Scalar>* conv_b_ = nullptr;
  Head<Scalar> head_;
};

}  // namespace

template <typename Scalar>
std::unique_ptr<Model<Scalar>> make_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  switch (spec.kind) {
    case ModelKind::Cnn:
    case ModelKind::Caml:
      return std::make_unique<ConvModel<Scalar>>(spec, rng);
    case ModelKind::TruncFcn:
    case ModelKind::TruncLan:
      return std::make_unique<TruncModel<Scalar>>(spec, rng);
    case ModelKind::HierFcn:
    case ModelKind::HierLan:
      return std::make_unique<HierModel<Scalar>>(spec, rng);
  }
  throw ConfigError("unhandled model kind");
}

template <typename Scalar>
void set_word_embeddings(Model<Scalar>& model, const Matrix<double>& table) {
  auto* p = model.find_parameter("embed.words");
  if (!p) throw ConfigError(to_string(model.spec().kind) + " model has no word embedding table");
  if (p->value.rows() != table.rows() || p->value.cols() != table.cols()) {
    throw DimensionError("word embeddings " + shape_string(table) + " do not fit table " +
                         shape_string(p->value));
  }
  p->value = table.cast<Scalar>();
}

template <typename Scalar>
Matrix<Scalar> predict(const Model<Scalar>& model, std::span<const int> ids,
                       ForwardTrace<Scalar>* trace) {
  Tape<Scalar> tape(false, false);
  return model.forward(tape, ids, trace).value();
}

template <typename To, typename From>
void copy_parameters(const Model<From>& from, Model<To>& to) {
  auto src = from.parameters();
  auto dst = to.parameters();
  if (src.size() != dst.size()) throw DimensionError("copy_parameters: parameter lists differ");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->value.rows() != dst[i]->value.rows() ||
        src[i]->value.cols() != dst[i]->value.cols()) {
      throw DimensionError("copy_parameters: " + src[i]->name + " does not match " +
                           dst[i]->name);
    }
    dst[i]->value = src[i]->value.template cast<To>();
  }
}

template class Model<float>;
template class Model<double>;

#define MEDCODE_INSTANTIATE_MODELS(S)                                                       \
  template class ParameterSet<S>;                                                           \
  template class TransformerEncoder<S>;                                                     \
  template LabelAttentionResult<S> label_attention(Var<S>, Var<S>, std::span<const bool>);  \
  template Var<S> classify_from_v(Var<S>, Var<S>, Var<S>);                                  \
  template Var<S> fcn_classify(Var<S>, Var<S>, Var<S>);                                     \
  template std::unique_ptr<Model<S>> make_model(const ModelSpec&, std::uint64_t);           \
  template void set_word_embeddings(Model<S>&, const Matrix<double>&);                      \
  template Matrix<S> predict(const Model<S>&, std::span<const int>, ForwardTrace<S>*);

MEDCODE_INSTANTIATE_MODELS(float)
MEDCODE_INSTANTIATE_MODELS(double)

#undef MEDCODE_INSTANTIATE_MODELS

template void copy_parameters(const Model<double>&, Model<float>&);
template void copy_parameters(const Model<float>&, Model<double>&);
template void copy_parameters(const Model<float>&, Model<float>&);
template void copy_parameters(const Model<double>&, Model<double>&);

}  // namespace medcode
