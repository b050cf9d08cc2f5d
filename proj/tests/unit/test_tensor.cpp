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
#include <functional>
#include <vector>

#include "medcode/errors.hpp"
#include "medcode/grad_check.hpp"
#include "medcode/ops.hpp"
#include "grad_cases.hpp"
#include "test_util.hpp"

using namespace medcode;
using medcode::testing::make_param;
using medcode::testing::Mat;
using medcode::testing::random_matrix;
using medcode::testing::weighted_sum;

namespace {

// Direct-loop 1-D convolution, independent of the im2col path.
Mat naive_conv(const Mat& x, const Mat& w, const Mat& b, int k, bool same) {
  const Index n = x.rows(), d = x.cols(), f = w.cols();
  const Index left = same ? (k - 1) / 2 : 0;
  const Index len = same ? n : n - k + 1;
  Mat out(len, f);
  for (Index t = 0; t < len; ++t) {
    for (Index o = 0; o < f; ++o) {
      double acc = b(0, o);
      for (Index j = 0; j < k; ++j) {
        const Index src = t + j - left;
        if (src < 0 || src >= n) continue;
        for (Index c = 0; c < d; ++c) acc += x(src, c) * w(j * d + c, o);
      }
      out(t, o) = acc;
    }
  }
  return out;
}

Mat naive_layer_norm(const Mat& x, const Mat& g, const Mat& b, double eps) {
  Mat out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double mean = 0;
    for (Index c = 0; c < x.cols(); ++c) mean += x(r, c);
    mean /= x.cols();
    double var = 0;
    for (Index c = 0; c < x.cols(); ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= x.cols();
    for (Index c = 0; c < x.cols(); ++c) {
      out(r, c) = (x(r, c) - mean) / std::sqrt(var + eps) * g(0, c) + b(0, c);
    }
  }
  return out;
}

// Central-difference gradient of scalar fn(m) with respect to every entry.
Mat numeric_gradient(Mat m, const std::function<double(const Mat&)>& fn,
                     double step = 1e-5) {
  Mat g(m.rows(), m.cols());
  for (Index i = 0; i < m.size(); ++i) {
    const double saved = m.data()[i];
    m.data()[i] = saved + step;
    const double up = fn(m);
    m.data()[i] = saved - step;
    const double down = fn(m);
    m.data()[i] = saved;
    g.data()[i] = (up - down) / (2 * step);
  }
  return g;
}

double max_rel_err(const Mat& a, const Mat& b) {
  double worst = 0;
  for (Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a.data()[i], b.data()[i]));
  }
  return worst;
}

Mat row(std::initializer_list<double> values) {
  Mat m(1, static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) m(0, i++) = v;
  return m;
}

}  // namespace

TEST_CASE("matmul") {
  Tape<double> tape;
  Mat b(2, 2);
  b << 5, 6, 7, 8;

  SUBCASE("identity") {
    auto out = matmul(tape.constant(Mat::Identity(2, 2)), tape.constant(b));
    CHECK(out.value() == b);
  }
  SUBCASE("hand product") {
    Mat a(2, 2);
    a << 1, 2, 3, 4;
    auto out = matmul(tape.constant(a), tape.constant(Mat::Ones(2, 1)));
    CHECK(out.value()(0, 0) == 3);
    CHECK(out.value()(1, 0) == 7);
  }
  SUBCASE("shape error names both shapes") {
    auto a = tape.constant(Mat::Zero(2, 3));
    auto c = tape.constant(Mat::Zero(4, 2));
    try {
      matmul(a, c);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[4x2]") != std::string::npos);
    }
  }
  SUBCASE("gradient of sum(A*B) matches finite differences") {
    Rng rng(11);
    Mat a = random_matrix(3, 4, rng);
    Mat bm = random_matrix(4, 2, rng);
    auto pa = make_param("a", a);
    Tape<double> t;
    auto loss = sum(matmul(t.parameter(pa), t.constant(bm)));
    t.backward(loss);
    Mat numeric = numeric_gradient(a, [&](const Mat& m) { return (m * bm).sum(); });
    CHECK(max_rel_err(pa.grad, numeric) < 1e-6);
  }
}

TEST_CASE("softmax") {
  Tape<double> tape;
  SUBCASE("symmetric") {
    auto y = softmax(tape.constant(row({0, 0})), 1);
    CHECK(y.value()(0, 0) == doctest::Approx(0.5));
    CHECK(y.value()(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("closed form") {
    auto y = softmax(tape.constant(row({std::log(1.0), std::log(3.0)})), 1);
    CHECK(y.value()(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y.value()(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
  }
  SUBCASE("shift invariance per slice") {
    Rng rng(3);
    Mat x = random_matrix(3, 5, rng, -5, 5);
    Mat shifted = x;
    for (Index c = 0; c < x.cols(); ++c) shifted.col(c).array() += 7.0 * c - 3;
    auto a = softmax(tape.constant(x), 0);
    auto b = softmax(tape.constant(shifted), 0);
    CHECK((a.value() - b.value()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("slices sum to one and are positive") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      Mat x = random_matrix(4, 6, rng, -50, 50);
      for (int axis : {0, 1}) {
        auto y = softmax(tape.constant(x), axis).value();
        Mat sums = axis == 1 ? Mat(y.rowwise().sum()) : Mat(y.colwise().sum());
        CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-6);
        CHECK(y.minCoeff() > 0.0);
      }
    }
  }
  SUBCASE("invalid axis") {
    CHECK_THROWS_AS(softmax(tape.constant(row({1, 2})), 2), DimensionError);
  }
}

TEST_CASE("sigmoid") {
  Tape<double> tape;
  Mat x = row({0.0, 50.0, -50.0});
  auto p = make_param("x", x);
  auto y = sigmoid(tape.parameter(p));
  CHECK(y.value()(0, 0) == 0.5);
  CHECK(std::abs(y.value()(0, 1) - 1.0) < 1e-12);
  CHECK(y.value()(0, 2) > 0.0);
  tape.backward(sum(slice_cols(y, 0, 1)));
  CHECK(p.grad(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("conv1d") {
  Tape<double> tape;
  SUBCASE("unit kernel sums channels") {
    Mat x(3, 2);
    x << 1, 2, 3, 4, 5, 6;
    auto y = conv1d(tape.constant(x), tape.constant(Mat::Ones(2, 1)),
                    tape.constant(Mat::Zero(1, 1)), 1, Padding::Same);
    CHECK(y.rows() == 3);
    CHECK(y.value()(0, 0) == 3);
    CHECK(y.value()(1, 0) == 7);
    CHECK(y.value()(2, 0) == 11);
  }
  SUBCASE("valid length arithmetic") {
    auto y = conv1d(tape.constant(Mat::Ones(5, 3)), tape.constant(Mat::Ones(12, 2)),
                    tape.constant(Mat::Zero(1, 2)), 4, Padding::Valid);
    CHECK(y.rows() == 2);
    CHECK_THROWS_AS(conv1d(tape.constant(Mat::Ones(3, 3)),
                           tape.constant(Mat::Ones(12, 2)),
                           tape.constant(Mat::Zero(1, 2)), 4, Padding::Valid),
                    DimensionError);
  }
  SUBCASE("same padding preserves length") {
    for (int n = 1; n <= 9; ++n) {
      for (int k = 1; k <= 6; ++k) {
        auto y = conv1d(tape.constant(Mat::Ones(n, 2)),
                        tape.constant(Mat::Ones(2 * k, 3)),
                        tape.constant(Mat::Zero(1, 3)), k, Padding::Same);
        CHECK(y.rows() == n);
      }
    }
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(conv1d(tape.constant(Mat(0, 2)), tape.constant(Mat::Ones(2, 1)),
                           tape.constant(Mat::Zero(1, 1)), 1, Padding::Same),
                    DimensionError);
  }
  SUBCASE("forward matches direct loop, gradients match finite differences") {
    Rng rng(21);
    for (bool same : {true, false}) {
      for (int k : {1, 2, 3, 4}) {
        const int n = 7, d = 3, f = 2;
        Mat x = random_matrix(n, d, rng);
        Mat w = random_matrix(k * d, f, rng);
        Mat b = random_matrix(1, f, rng);
        Mat r = random_matrix(same ? n : n - k + 1, f, rng);
        auto px = make_param("x", x);
        auto pw = make_param("w", w);
        Tape<double> t;
        auto y = conv1d(t.parameter(px), t.parameter(pw), t.constant(b), k,
                        same ? Padding::Same : Padding::Valid);
        CHECK((y.value() - naive_conv(x, w, b, k, same)).cwiseAbs().maxCoeff() <
              1e-12);
        t.backward(weighted_sum(y, r));
        auto gx = numeric_gradient(x, [&](const Mat& m) {
          return naive_conv(m, w, b, k, same).cwiseProduct(r).sum();
        });
        auto gw = numeric_gradient(w, [&](const Mat& m) {
          return naive_conv(x, m, b, k, same).cwiseProduct(r).sum();
        });
        CHECK(max_rel_err(px.grad, gx) < 1e-5);
        CHECK(max_rel_err(pw.grad, gw) < 1e-5);
      }
    }
  }
}

TEST_CASE("max_pool_over_time") {
  Tape<double> tape;
  SUBCASE("single row") {
    auto y = max_pool_over_time(tape.constant(row({4, -1, 2})));
    CHECK(y.value() == row({4, -1, 2}));
  }
  SUBCASE("per-channel max") {
    Mat x(2, 2);
    x << 1, 5, 3, 2;
    CHECK(max_pool_over_time(tape.constant(x)).value() == row({3, 5}));
  }
  SUBCASE("ties route to the first index") {
    Mat x(2, 1);
    x << 2, 2;
    auto p = make_param("x", x);
    tape.backward(sum(max_pool_over_time(tape.parameter(p))));
    CHECK(p.grad(0, 0) == 1.0);
    CHECK(p.grad(1, 0) == 0.0);
  }
  SUBCASE("empty") {
    CHECK_THROWS_AS(max_pool_over_time(tape.constant(Mat(0, 3))), DimensionError);
  }
}

TEST_CASE("embedding_lookup") {
  Rng rng(8);
  Mat table = random_matrix(5, 3, rng);
  SUBCASE("repeated id copies the row") {
    Tape<double> tape;
    std::vector<int> ids{0, 0};
    auto y = embedding_lookup(tape.constant(table), std::span<const int>(ids));
    CHECK(y.value().row(0) == table.row(0));
    CHECK(y.value().row(1) == table.row(0));
  }
  SUBCASE("frozen table receives no gradient") {
    auto p = make_param("emb", table);
    p.frozen = true;
    Tape<double> tape;
    std::vector<int> ids{1, 2};
    auto x = make_param("x", Mat::Ones(2, 3));
    auto y = hadamard(embedding_lookup(tape.parameter(p), std::span<const int>(ids)),
                      tape.parameter(x));
    tape.backward(sum(y));
    CHECK(p.grad.isZero());
    CHECK(!x.grad.isZero());
  }
  SUBCASE("gradient of sum equals per-id row counts") {
    std::uniform_int_distribution<int> pick(0, 4);
    std::vector<int> ids(40);
    for (auto& id : ids) id = pick(rng);
    std::vector<double> counts(5, 0.0);
    for (int id : ids) counts[static_cast<std::size_t>(id)] += 1;
    auto p = make_param("emb", table);
    Tape<double> tape;
    tape.backward(sum(embedding_lookup(tape.parameter(p), std::span<const int>(ids))));
    for (Index r = 0; r < 5; ++r) {
      for (Index c = 0; c < 3; ++c) CHECK(p.grad(r, c) == counts[static_cast<std::size_t>(r)]);
    }
  }
  SUBCASE("out of range names the position") {
    Tape<double> tape;
    std::vector<int> ids{0, 1, 9};
    try {
      embedding_lookup(tape.constant(table), std::span<const int>(ids));
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(std::string(e.what()).find("position 2") != std::string::npos);
    }
  }
}

TEST_CASE("layer_norm") {
  Tape<double> tape;
  auto gain = tape.constant(Mat::Ones(1, 4));
  auto bias = tape.constant(Mat::Zero(1, 4));
  SUBCASE("constant row normalises to zero") {
    auto y = layer_norm(tape.constant(Mat::Constant(1, 4, 3.5)), gain, bias);
    CHECK(y.value().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero bias gives zero-mean rows") {
    Rng rng(4);
    auto y = layer_norm(tape.constant(random_matrix(3, 4, rng, -10, 10)), gain, bias);
    for (Index r = 0; r < 3; ++r) CHECK(std::abs(y.value().row(r).mean()) < 1e-9);
  }
  SUBCASE("gradients match finite differences of a direct implementation") {
    Rng rng(9);
    Mat x = random_matrix(3, 4, rng);
    Mat g = random_matrix(1, 4, rng, 0.5, 1.5);
    Mat b = random_matrix(1, 4, rng);
    Mat r = random_matrix(3, 4, rng);
    const double eps = 1e-12;
    auto px = make_param("x", x);
    auto pg = make_param("g", g);
    auto pb = make_param("b", b);
    Tape<double> t;
    auto y = layer_norm(t.parameter(px), t.parameter(pg), t.parameter(pb), eps);
    CHECK((y.value() - naive_layer_norm(x, g, b, eps)).cwiseAbs().maxCoeff() < 1e-12);
    t.backward(weighted_sum(y, r));
    auto fx = [&](const Mat& m) { return naive_layer_norm(m, g, b, eps).cwiseProduct(r).sum(); };
    auto fg = [&](const Mat& m) { return naive_layer_norm(x, m, b, eps).cwiseProduct(r).sum(); };
    auto fb = [&](const Mat& m) { return naive_layer_norm(x, g, m, eps).cwiseProduct(r).sum(); };
    CHECK(max_rel_err(px.grad, numeric_gradient(x, fx)) < 1e-5);
    CHECK(max_rel_err(pg.grad, numeric_gradient(g, fg)) < 1e-5);
    CHECK(max_rel_err(pb.grad, numeric_gradient(b, fb)) < 1e-5);
  }
}

namespace {

struct AttnFixture {
  std::vector<Parameter<double>> params;
  explicit AttnFixture(Index h, Rng& rng) {
    for (const char* n : {"wq", "wk", "wv", "wo"}) params.push_back(make_param(n, random_matrix(h, h, rng)));
    for (const char* n : {"bq", "bk", "bv", "bo"}) params.push_back(make_param(n, random_matrix(1, h, rng)));
  }
  AttentionWeights<double> bind(Tape<double>& t) {
    return {t.parameter(params[0]), t.parameter(params[4]), t.parameter(params[1]),
            t.parameter(params[5]), t.parameter(params[2]), t.parameter(params[6]),
            t.parameter(params[3]), t.parameter(params[7])};
  }
};

}  // namespace

TEST_CASE("multi_head_attention") {
  Rng rng(17);
  const Index h = 4;
  AttnFixture fx(h, rng);
  SUBCASE("single position returns the projected value") {
    Tape<double> t;
    Mat x = random_matrix(1, h, rng);
    auto w = fx.bind(t);
    auto xv = t.constant(x);
    auto res = multi_head_attention(xv, xv, xv, w, 2);
    Mat expected = ((x * fx.params[2].value + fx.params[6].value) * fx.params[3].value) +
                   fx.params[7].value;
    CHECK((res.output.value() - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("all keys masked but one") {
    Tape<double> t;
    auto x = t.constant(random_matrix(5, h, rng, -3, 3));
    auto w = fx.bind(t);
    const bool keep[] = {false, false, true, false, false};
    auto res = multi_head_attention(x, x, x, w, 2, keep);
    for (const auto& a : res.weights) {
      for (Index q = 0; q < a.rows(); ++q) {
        CHECK(a(q, 2) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(a(q, 0) == 0.0);
      }
    }
  }
  SUBCASE("weights are distributions") {
    Tape<double> t;
    auto x = t.constant(random_matrix(6, h, rng, -5, 5));
    auto w = fx.bind(t);
    auto res = multi_head_attention(x, x, x, w, 4);
    CHECK(res.weights.size() == 4);
    for (const auto& a : res.weights) {
      CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
    }
  }
  SUBCASE("indivisible heads") {
    Tape<double> t;
    auto x = t.constant(random_matrix(2, h, rng));
    auto w = fx.bind(t);
    CHECK_THROWS_AS(multi_head_attention(x, x, x, w, 3), ConfigError);
  }
  SUBCASE("mask length mismatch") {
    Tape<double> t;
    auto x = t.constant(random_matrix(3, h, rng));
    auto w = fx.bind(t);
    const bool keep[] = {true, true};
    CHECK_THROWS_AS(multi_head_attention(x, x, x, w, 2, keep), DimensionError);
  }
}

TEST_CASE("backward") {
  SUBCASE("sum gives ones") {
    auto p = make_param("x", Mat::Constant(2, 3, 0.3));
    Tape<double> t;
    t.backward(sum(t.parameter(p)));
    CHECK(p.grad == Mat::Ones(2, 3));
  }
  SUBCASE("sum of squares") {
    auto p = make_param("x", row({1, 2}));
    Tape<double> t;
    auto x = t.parameter(p);
    t.backward(sum(hadamard(x, x)));
    CHECK(p.grad == row({2, 4}));
  }
  SUBCASE("second call accumulates") {
    auto p = make_param("x", row({1, 2}));
    Tape<double> t;
    auto x = t.parameter(p);
    auto loss = sum(hadamard(x, x));
    t.backward(loss);
    t.backward(loss);
    CHECK(p.grad == row({4, 8}));
  }
  SUBCASE("non-scalar seed") {
    auto p = make_param("x", row({1, 2}));
    Tape<double> t;
    CHECK_THROWS_AS(t.backward(t.parameter(p)), DimensionError);
  }
  SUBCASE("deterministic") {
    Rng rng(2);
    Mat x = random_matrix(4, 3, rng);
    Mat w = random_matrix(3, 5, rng);
    auto run = [&]() {
      auto px = make_param("x", x);
      auto pw = make_param("w", w);
      Tape<double> t(true, true, 77);
      auto y = softmax(dropout(matmul(t.parameter(px), t.parameter(pw)), 0.3), 1);
      t.backward(weighted_sum(y, Mat::Constant(4, 5, 0.7) + Mat(w.transpose() * w).topLeftCorner(4, 5)));
      return std::pair{px.grad, pw.grad};
    };
    auto a = run();
    auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }
  SUBCASE("forward rejects non-finite values") {
    Tape<double> t;
    Mat bad = row({1.0, std::nan("")});
    CHECK_THROWS_AS(sigmoid(t.constant(bad)), NumericError);
  }
}

TEST_CASE("dropout") {
  Rng rng(1);
  Mat x = random_matrix(20, 20, rng, 1, 2);
  SUBCASE("identity in evaluation mode") {
    Tape<double> t(false);
    auto v = t.constant(x);
    CHECK(dropout(v, 0.5).id() == v.id());
  }
  SUBCASE("inverted scaling in training mode") {
    Tape<double> t(true, true, 5);
    auto y = dropout(t.constant(x), 0.25).value();
    Index zeros = 0;
    for (Index i = 0; i < y.size(); ++i) {
      if (y.data()[i] == 0.0) {
        ++zeros;
      } else {
        CHECK(y.data()[i] == doctest::Approx(x.data()[i] / 0.75));
      }
    }
    CHECK(zeros > 50);
    CHECK(zeros < 150);
  }
}

TEST_CASE("grad_check") {
  Rng rng(31);
  SUBCASE("sum is exact") {
    auto p = make_param("x", random_matrix(3, 3, rng));
    auto report = grad_check([&](Tape<double>& t) { return sum(t.parameter(p)); }, {&p});
    CHECK(report.pass);
    CHECK(report.max_rel_err < 1e-8);
    CHECK(report.coordinates_checked == 9);
  }
  SUBCASE("bce of sigmoid of matmul") {
    for (int trial = 0; trial < 5; ++trial) {
      auto x = make_param("x", random_matrix(1, 4, rng));
      auto w = make_param("w", random_matrix(4, 3, rng));
      std::vector<double> y{1, 0, 1};
      auto report = grad_check(
          [&](Tape<double>& t) {
            return bce_loss(sigmoid(matmul(t.parameter(x), t.parameter(w))),
                            std::span<const double>(y));
          },
          {&x, &w});
      CHECK(report.pass);
    }
  }
  SUBCASE("corrupted gradient fails") {
    auto p = make_param("x", random_matrix(2, 3, rng));
    auto corrupted_square = [](Var<double> v) {
      Mat out = v.value().cwiseProduct(v.value());
      return v.tape().record("bad_square", out, {v}, [v](Tape<double>& t, std::size_t self) {
        if (t.requires_grad(v.id())) {
          t.grad(v.id()) += (t.grad(self).cwiseProduct(2.0 * v.value())) * 1.01;
        }
      });
    };
    auto report = grad_check([&](Tape<double>& t) { return sum(corrupted_square(t.parameter(p))); },
                             {&p});
    CHECK_FALSE(report.pass);
  }
  SUBCASE("non-finite output is a failed report") {
    auto p = make_param("x", row({1.0, 2.0}));
    auto report = grad_check(
        [&](Tape<double>& t) {
          auto x = t.parameter(p);
          Mat big = Mat::Constant(1, 2, 1e308);
          return sum(hadamard(hadamard(x, t.constant(big)), t.constant(big)));
        },
        {&p});
    CHECK_FALSE(report.pass);
    CHECK_FALSE(report.failure.empty());
  }
  SUBCASE("large parameter sets are subsampled") {
    auto p = make_param("x", random_matrix(50, 30, rng));
    GradCheckOptions opts;
    opts.max_coordinates = 100;
    auto report = grad_check([&](Tape<double>& t) { return sum(t.parameter(p)); }, {&p}, opts);
    CHECK(report.coordinates_checked == 100);
    CHECK(report.pass);
  }
}

// Every differentiable op over 20 seeded shape combinations.
TEST_CASE("op gradient suite") {
  for (const auto& c : medcode::testing::op_gradient_cases()) {
    CAPTURE(c.name);
    for (int seed = 0; seed < 20; ++seed) {
      CAPTURE(seed);
      const auto report = medcode::testing::run_op_case(c, seed);
      CHECK_MESSAGE(report.pass, report.worst, " rel err ", report.max_rel_err);
    }
  }
}

TEST_CASE("forward ops stay finite for bounded inputs") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Tape<double> t;
    auto x = t.constant(random_matrix(5, 4, rng, -50, 50));
    CHECK_NOTHROW(sigmoid(x));
    CHECK_NOTHROW(medcode::tanh(x));
    CHECK_NOTHROW(gelu(x));
    CHECK_NOTHROW(softmax(x, 0));
    CHECK_NOTHROW(softmax(x, 1));
    CHECK_NOTHROW(layer_norm(x, t.constant(Mat::Ones(1, 4)), t.constant(Mat::Zero(1, 4))));
    auto probs = sigmoid(x);
    std::vector<double> y(4, 1.0);
    CHECK_NOTHROW(bce_loss(slice_rows(probs, 0, 1), std::span<const double>(y)));
  }
}
