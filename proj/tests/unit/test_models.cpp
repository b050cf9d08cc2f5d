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
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "medcode/errors.hpp"
#include "medcode/grad_check.hpp"
#include "medcode/models.hpp"
#include "medcode/text.hpp"
#include "test_util.hpp"

using namespace medcode;
using medcode::testing::Mat;
using medcode::testing::random_matrix;

namespace {

ModelSpec tiny_spec(ModelKind kind, int labels = 3) {
  ModelSpec s;
  s.kind = kind;
  s.vocab_size = 20;
  s.num_labels = labels;
  s.encoder.hidden = 8;
  s.encoder.layers = 1;
  s.encoder.heads = 2;
  s.encoder.ff = 12;
  s.encoder.max_positions = 6;
  s.encoder.seg_len = 5;
  s.encoder.max_total = 12;
  s.encoder.top_layers = 1;
  s.cnn.embedding_dim = 6;
  s.cnn.kernel = 3;
  s.cnn.filters = 5;
  s.cnn.static_embeddings = false;
  return s;
}

std::vector<int> random_ids(int n, int vocab, Rng& rng) {
  std::uniform_int_distribution<int> d(Vocabulary::kNumSpecial, vocab - 1);
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (auto& i : ids) i = d(rng);
  return ids;
}

const ModelKind kAllKinds[] = {ModelKind::Cnn,      ModelKind::Caml,    ModelKind::TruncFcn,
                               ModelKind::TruncLan, ModelKind::HierFcn, ModelKind::HierLan};

}  // namespace

TEST_CASE("label attention degenerate cases") {
  Tape<double> tape;
  auto zero = label_attention(tape.constant(Mat::Zero(2, 1)), tape.constant(Mat::Constant(1, 3, 0.7)));
  for (Index l = 0; l < 3; ++l) {
    CHECK(zero.a.value()(0, l) == doctest::Approx(0.5));
    CHECK(zero.a.value()(1, l) == doctest::Approx(0.5));
  }
  CHECK(zero.v.value().isZero());

  Rng rng(2);
  const Mat h1 = random_matrix(1, 4, rng);
  auto single = label_attention(tape.constant(h1), tape.constant(random_matrix(4, 3, rng)));
  CHECK(single.a.value().isOnes());
  for (Index l = 0; l < 3; ++l) CHECK(single.v.value().row(l) == h1.row(0));
}

TEST_CASE("label attention columns are distributions and V is a convex mix") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 1 + trial % 9;
    const Mat h = random_matrix(n, 5, rng, -3, 3);
    Tape<double> tape;
    auto r = label_attention(tape.constant(h), tape.constant(random_matrix(5, 4, rng, -3, 3)));
    const Mat& a = r.a.value();
    for (Index l = 0; l < 4; ++l) CHECK(std::abs(a.col(l).sum() - 1.0) < 1e-6);
    CHECK((a.array() >= 0).all());
    const Mat& v = r.v.value();
    for (Index l = 0; l < 4; ++l) {
      for (Index c = 0; c < 5; ++c) {
        CHECK(v(l, c) >= h.col(c).minCoeff() - 1e-12);
        CHECK(v(l, c) <= h.col(c).maxCoeff() + 1e-12);
      }
    }
  }
}

TEST_CASE("label attention masking") {
  Rng rng(4);
  Tape<double> tape;
  auto h = tape.constant(random_matrix(4, 3, rng));
  auto u = tape.constant(random_matrix(3, 2, rng));
  const bool keep[] = {true, false, true, false};
  auto r = label_attention(h, u, keep);
  for (Index l = 0; l < 2; ++l) {
    CHECK(r.a.value()(1, l) == 0.0);
    CHECK(r.a.value()(3, l) == 0.0);
    CHECK(std::abs(r.a.value().col(l).sum() - 1.0) < 1e-12);
  }
  const bool none[] = {false, false, false, false};
  CHECK_THROWS_AS(label_attention(h, u, none), DimensionError);
  const bool short_mask[] = {true};
  CHECK_THROWS_AS(label_attention(h, u, short_mask), DimensionError);
}

TEST_CASE("classify_from_v") {
  Rng rng(5);
  Tape<double> tape;
  auto v = tape.constant(random_matrix(3, 4, rng));
  auto half = classify_from_v(v, tape.constant(Mat::Zero(3, 4)), tape.constant(Mat::Zero(1, 3)));
  CHECK(half.value().isConstant(0.5));

  Mat v1(1, 2), w1(1, 2), b1(1, 1);
  v1 << 0.5, -1.0;
  w1 << 2.0, 0.25;
  b1 << 0.1;
  auto one = classify_from_v(tape.constant(v1), tape.constant(w1), tape.constant(b1));
  CHECK(one.item() == doctest::Approx(1.0 / (1.0 + std::exp(-(1.0 - 0.25 + 0.1)))).epsilon(1e-12));

  for (int t = 0; t < 20; ++t) {
    auto p = classify_from_v(tape.constant(random_matrix(3, 4, rng, -3, 3)),
                             tape.constant(random_matrix(3, 4, rng, -3, 3)),
                             tape.constant(random_matrix(1, 3, rng)));
    CHECK((p.value().array() > 0).all());
    CHECK((p.value().array() < 1).all());
  }
}

TEST_CASE("fcn_classify") {
  Tape<double> tape;
  Rng rng(6);
  auto c = tape.constant(random_matrix(1, 4, rng));
  CHECK(fcn_classify(c, tape.constant(Mat::Zero(4, 3)), tape.constant(Mat::Zero(1, 3))).value().isConstant(0.5));

  Mat c2(1, 2), w2(2, 1), b2(1, 1);
  c2 << 1.0, 2.0;
  w2 << 0.5, -0.75;
  b2 << 0.2;
  auto p = fcn_classify(tape.constant(c2), tape.constant(w2), tape.constant(b2));
  CHECK(p.item() == doctest::Approx(1.0 / (1.0 + std::exp(-(0.5 - 1.5 + 0.2)))).epsilon(1e-12));

  // Raising a coordinate with positive weight raises the probability.
  Mat bumped = c2;
  bumped(0, 0) += 0.3;
  CHECK(fcn_classify(tape.constant(bumped), tape.constant(w2), tape.constant(b2)).item() > p.item());
}

TEST_CASE("model kinds and specs") {
  for (auto k : kAllKinds) CHECK(parse_model_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_model_kind("bert"), ConfigError);

  auto s = tiny_spec(ModelKind::HierLan);
  auto back = model_spec_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));

  auto bad = s;
  bad.encoder.heads = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = s;
  bad.encoder.seg_len = 7;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = tiny_spec(ModelKind::Cnn);
  bad.cnn.kernel = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(ModelSpec{}.cnn.kernel == 4);
  CHECK(ModelSpec{}.cnn.filters == 500);
  CHECK(ModelSpec{}.cnn.dropout == 0.2);
  CHECK(ModelSpec{}.encoder.top_layers == 2);
}

TEST_CASE("encoder forward contract") {
  EncoderConfig cfg = tiny_spec(ModelKind::TruncFcn).encoder;
  ParameterSet<double> params;
  Rng rng(7);
  TransformerEncoder<double> enc(params, "enc", 20, 6, 2, cfg, 0, rng);
  const std::vector<int> ids{Vocabulary::kSeg, 5, 9, 11, 4};

  Tape<double> t1;
  auto a = enc.forward(t1, ids);
  CHECK(a.states.rows() == 5);
  CHECK(a.states.cols() == 8);
  CHECK(a.states.value().allFinite());
  CHECK(a.pooled.value() == a.states.value().row(0));
  Tape<double> t2;
  CHECK(enc.forward(t2, ids).states.value() == a.states.value());

  auto swapped = ids;
  std::swap(swapped[1], swapped[3]);
  Tape<double> t3;
  CHECK(!(enc.forward(t3, swapped).pooled.value() - a.pooled.value()).isZero(1e-9));

  Tape<double> t4;
  CHECK_THROWS_AS(enc.forward(t4, std::vector<int>(7, 4)), DimensionError);
}

TEST_CASE("every architecture passes the gradient check on tiny configs") {
  Rng rng(8);
  for (auto kind : kAllKinds) {
    for (int seed = 0; seed < 3; ++seed) {
      auto spec = tiny_spec(kind, 2 + seed % 3);
      auto model = make_model<double>(spec, 100 + seed);
      // Unit-scale word vectors.
      if (!is_encoder(kind)) {
        model->find_parameter("embed.words")->value = random_matrix(spec.vocab_size, 6, rng);
      }
      const auto ids = random_ids(kind == ModelKind::TruncFcn || kind == ModelKind::TruncLan
                                      ? 4
                                      : 7 + seed * 2,
                                  spec.vocab_size, rng);
      std::vector<double> y(static_cast<std::size_t>(spec.num_labels));
      for (std::size_t l = 0; l < y.size(); ++l) y[l] = static_cast<double>((l + seed) % 2);
      GradCheckOptions opt;
      opt.seed = static_cast<std::uint64_t>(seed);
      opt.max_coordinates = 1500;
      auto report = grad_check(
          [&](Tape<double>& t) { return bce_loss(model->forward(t, ids), std::span<const double>(y)); },
          model->parameters(), opt);
      INFO(to_string(kind), " seed ", seed, " worst ", report.worst, " ", report.failure);
      CHECK(report.pass);
      CHECK(report.max_rel_err < 1e-4);
    }
  }
}

TEST_CASE("trunc model reads only the first segment") {
  ModelSpec spec;
  spec.kind = ModelKind::TruncLan;
  spec.vocab_size = 50;
  spec.num_labels = 4;
  spec.encoder.hidden = 16;
  spec.encoder.layers = 1;
  spec.encoder.heads = 2;
  spec.encoder.ff = 16;
  auto model = make_model<double>(spec, 1);
  Rng rng(9);
  auto ids = random_ids(600, spec.vocab_size, rng);
  ForwardTrace<double> trace;
  const Mat base = predict(*model, ids, &trace);
  CHECK(base.cols() == 4);
  CHECK((base.array() > 0).all());
  CHECK((base.array() < 1).all());
  CHECK(trace.positions == 512);

  auto late = ids;
  late[550] = late[550] == 3 ? 4 : 3;
  CHECK(predict(*model, late) == base);
  auto early = ids;
  early[100] = early[100] == 3 ? 4 : 3;
  CHECK(predict(*model, early) != base);

  CHECK_THROWS_AS(predict(*model, std::vector<int>{}), DataError);
}

TEST_CASE("hierarchical model reaches across segments") {
  ModelSpec spec;
  spec.kind = ModelKind::HierLan;
  spec.vocab_size = 50;
  spec.num_labels = 3;
  spec.encoder.hidden = 8;
  spec.encoder.layers = 1;
  spec.encoder.heads = 2;
  spec.encoder.ff = 8;
  spec.encoder.top_layers = 1;
  auto model = make_model<double>(spec, 2);
  Rng rng(10);
  auto ids = random_ids(2600, spec.vocab_size, rng);
  ForwardTrace<double> trace;
  const Mat base = predict(*model, ids, &trace);
  CHECK(trace.inputs.size() == 5);
  CHECK(trace.positions == 2500);
  for (Index l = 0; l < 3; ++l) {
    CHECK(std::abs(trace.label_attention.col(l).sum() - 1.0) < 1e-6);
  }

  auto third = ids;
  third[1200] = third[1200] == 3 ? 4 : 3;
  CHECK(predict(*model, third) != base);
  auto beyond = ids;
  beyond[2550] = beyond[2550] == 3 ? 4 : 3;
  CHECK(predict(*model, beyond) == base);

  auto fcn_spec = spec;
  fcn_spec.kind = ModelKind::HierFcn;
  auto fcn = make_model<double>(fcn_spec, 2);
  auto short_doc = random_ids(40, spec.vocab_size, rng);
  const Mat p = predict(*fcn, short_doc);
  CHECK(p.cols() == 3);
  CHECK(p.allFinite());
  CHECK(predict(*fcn, std::vector<int>{}).allFinite());
}

TEST_CASE("hierarchy adds parameters") {
  auto trunc = make_model<float>(tiny_spec(ModelKind::TruncFcn), 1);
  auto hier = make_model<float>(tiny_spec(ModelKind::HierFcn), 1);
  CHECK(trunc->parameter_count() < hier->parameter_count());
  ModelSpec full;
  full.kind = ModelKind::TruncFcn;
  full.vocab_size = 1000;
  full.num_labels = 50;
  auto a = make_model<float>(full, 1);
  full.kind = ModelKind::HierFcn;
  auto b = make_model<float>(full, 1);
  CHECK(a->parameter_count() < b->parameter_count());
}

TEST_CASE("cnn baseline properties") {
  auto spec = tiny_spec(ModelKind::Cnn);
  spec.cnn.kernel = 4;
  spec.cnn.static_embeddings = true;
  auto model = make_model<double>(spec, 3);
  CHECK(model->trainable_parameter_count() < model->parameter_count());

  // Zero filters: the pooled vector is relu(bias) whatever the document.
  auto* w = model->find_parameter("conv.w");
  auto* b = model->find_parameter("conv.b");
  const Mat saved = w->value;
  w->value.setZero();
  b->value << 0.5, -1, 2, 0, 1;
  Rng rng(11);
  const Mat p1 = predict(*model, random_ids(9, 20, rng));
  const Mat p2 = predict(*model, random_ids(3, 20, rng));
  CHECK((p1 - p2).isZero(1e-15));
  w->value = saved;

  // A lone keyword scores the same wherever it sits away from the edges.
  std::vector<int> doc(20, 5);
  doc[6] = 17;
  const Mat at6 = predict(*model, doc);
  doc[6] = 5;
  doc[13] = 17;
  const Mat at13 = predict(*model, doc);
  CHECK((at6 - at13).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(at6.cols() == 3);
  CHECK(predict(*model, std::vector<int>{}).allFinite());
}

TEST_CASE("caml with one token is a per-label linear read of the conv vector") {
  auto spec = tiny_spec(ModelKind::Caml, 4);
  auto model = make_model<double>(spec, 4);
  const std::vector<int> ids{7};
  ForwardTrace<double> trace;
  const Mat p = predict(*model, ids, &trace);
  CHECK(trace.label_attention.isOnes());

  const Mat& emb = model->find_parameter("embed.words")->value;
  const Mat& cw = model->find_parameter("conv.w")->value;
  const Mat& cb = model->find_parameter("conv.b")->value;
  const Mat& hw = model->find_parameter("head.w")->value;
  const Mat& hb = model->find_parameter("head.b")->value;
  // Same padding with k=3 puts the token at tap 1.
  const Index d = spec.cnn.embedding_dim;
  Mat c = (emb.row(7) * cw.middleRows(d, d) + cb).cwiseMax(0.0);
  for (Index l = 0; l < 4; ++l) {
    const double expected = 1.0 / (1.0 + std::exp(-(hw.row(l).dot(c.row(0)) + hb(0, l))));
    CHECK(p(0, l) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("evaluation forward is deterministic and respects word vectors") {
  for (auto kind : kAllKinds) {
    auto spec = tiny_spec(kind);
    auto model = make_model<float>(spec, 5);
    Rng rng(12);
    auto ids = random_ids(10, spec.vocab_size, rng);
    CHECK(predict(*model, ids) == predict(*model, ids));
    auto twin = make_model<float>(spec, 5);
    CHECK(predict(*twin, ids) == predict(*model, ids));
  }
  auto cnn = make_model<double>(tiny_spec(ModelKind::Cnn), 1);
  Mat table = Mat::Constant(20, 6, 0.25);
  set_word_embeddings(*cnn, table);
  CHECK(cnn->find_parameter("embed.words")->value == table);
  CHECK_THROWS_AS(set_word_embeddings(*cnn, Mat(3, 6)), DimensionError);
  auto trunc = make_model<double>(tiny_spec(ModelKind::TruncFcn), 1);
  CHECK_THROWS_AS(set_word_embeddings(*trunc, table), ConfigError);
}
