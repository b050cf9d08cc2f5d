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

#include "medcode/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "medcode/errors.hpp"

namespace medcode {
namespace {

template <typename Scalar>
void accumulate(Tape<Scalar>& t, Var<Scalar> v, const auto& g) {
  if (t.requires_grad(v.id())) t.grad(v.id()) += g;
}

template <typename Scalar>
void require_same_shape(const char* op, Var<Scalar> a, Var<Scalar> b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.value()) + " vs " +
                         shape_string(b.value()));
  }
}

void check_axis(const char* op, int axis) {
  if (axis != 0 && axis != 1) {
    throw DimensionError(std::string(op) + ": invalid axis " +
                         std::to_string(axis));
  }
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ " +
                         shape_string(a.value()) + " x " +
                         shape_string(b.value()));
  }
  Matrix<Scalar> out = a.value() * b.value();
  return a.tape().record("matmul", std::move(out), {a, b},
                         [a, b](Tape<Scalar>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           accumulate(t, a, g * b.value().transpose());
                           accumulate(t, b, a.value().transpose() * g);
                         });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().transpose();
  return a.tape().record("transpose", std::move(out), {a},
                         [a](Tape<Scalar>& t, std::size_t self) {
                           accumulate(t, a, t.grad(self).transpose());
                         });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  require_same_shape("add", a, b);
  Matrix<Scalar> out = a.value() + b.value();
  return a.tape().record("add", std::move(out), {a, b},
                         [a, b](Tape<Scalar>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           accumulate(t, a, g);
                           accumulate(t, b, g);
                         });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  require_same_shape("sub", a, b);
  Matrix<Scalar> out = a.value() - b.value();
  return a.tape().record("sub", std::move(out), {a, b},
                         [a, b](Tape<Scalar>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           accumulate(t, a, g);
                           accumulate(t, b, -g);
                         });
}

template <typename Scalar>
Var<Scalar> hadamard(Var<Scalar> a, Var<Scalar> b) {
  require_same_shape("hadamard", a, b);
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return a.tape().record(
      "hadamard", std::move(out), {a, b},
      [a, b](Tape<Scalar>& t, std::size_t self) {
        const auto& g = t.grad(self);
        accumulate(t, a, g.cwiseProduct(b.value()));
        accumulate(t, b, g.cwiseProduct(a.value()));
      });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar factor) {
  Matrix<Scalar> out = a.value() * factor;
  return a.tape().record("scale", std::move(out), {a},
                         [a, factor](Tape<Scalar>& t, std::size_t self) {
                           accumulate(t, a, t.grad(self) * factor);
                         });
}

template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_row: cannot broadcast " +
                         shape_string(row.value()) + " onto " +
                         shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().rowwise() + row.value().row(0);
  return a.tape().record("add_row", std::move(out), {a, row},
                         [a, row](Tape<Scalar>& t, std::size_t self) {
                           const auto& g = t.grad(self);
                           accumulate(t, a, g);
                           accumulate(t, row, g.colwise().sum());
                         });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(
      "sum", std::move(out), {a}, [a](Tape<Scalar>& t, std::size_t self) {
        const Scalar g = t.grad(self)(0, 0);
        if (t.requires_grad(a.id())) t.grad(a.id()).array() += g;
      });
}

template <typename Scalar>
Var<Scalar> sum_axis(Var<Scalar> a, int axis) {
  check_axis("sum_axis", axis);
  Matrix<Scalar> out;
  if (axis == 0) {
    out = a.value().colwise().sum();
  } else {
    out = a.value().rowwise().sum();
  }
  return a.tape().record(
      "sum_axis", std::move(out), {a},
      [a, axis](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(a.id())) return;
        const auto& g = t.grad(self);
        auto& ga = t.grad(a.id());
        if (axis == 0) {
          ga.rowwise() += g.row(0);
        } else {
          ga.colwise() += g.col(0);
        }
      });
}

template <typename Scalar>
Var<Scalar> mean_rows(Var<Scalar> a) {
  return scale(sum_axis(a, 0), Scalar(1) / static_cast<Scalar>(a.rows()));
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().unaryExpr(
      [](Scalar x) { return stable_sigmoid(x); });
  return a.tape().record(
      "sigmoid", std::move(out), {a}, [a](Tape<Scalar>& t, std::size_t self) {
        const auto& y = t.value(self);
        accumulate(t, a,
                   (t.grad(self).array() * y.array() * (Scalar(1) - y.array()))
                       .matrix());
      });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().tanh().matrix();
  return a.tape().record(
      "tanh", std::move(out), {a}, [a](Tape<Scalar>& t, std::size_t self) {
        const auto& yv = t.value(self);
        accumulate(t, a,
                   (t.grad(self).array() * (Scalar(1) - yv.array().square()))
                       .matrix());
      });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return a.tape().record(
      "relu", std::move(out), {a}, [a](Tape<Scalar>& t, std::size_t self) {
        accumulate(t, a,
                   (t.grad(self).array() *
                    (a.value().array() > Scalar(0)).template cast<Scalar>())
                       .matrix());
      });
}

template <typename Scalar>
Var<Scalar> gelu(Var<Scalar> a) {
  const Scalar inv_sqrt2 = Scalar(1) / std::sqrt(Scalar(2));
  Matrix<Scalar> out = a.value().unaryExpr([inv_sqrt2](Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::erf(x * inv_sqrt2));
  });
  return a.tape().record(
      "gelu", std::move(out), {a},
      [a, inv_sqrt2](Tape<Scalar>& t, std::size_t self) {
        const Scalar inv_sqrt_2pi =
            Scalar(1) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
        Matrix<Scalar> d = a.value().unaryExpr([&](Scalar x) {
          const Scalar cdf = Scalar(0.5) * (Scalar(1) + std::erf(x * inv_sqrt2));
          const Scalar pdf = inv_sqrt_2pi * std::exp(Scalar(-0.5) * x * x);
          return cdf + x * pdf;
        });
        accumulate(t, a, t.grad(self).cwiseProduct(d));
      });
}

template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> a, int axis) {
  check_axis("softmax", axis);
  // Scalar std::exp underflows masked logits to exactly zero; the
  // vectorised Eigen exp clamps to a denormal instead.
  Matrix<Scalar> out = a.value();
  if (axis == 1) {
    for (Index r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      row.array() -= row.maxCoeff();
      row = row.unaryExpr([](Scalar v) { return std::exp(v); });
      row /= row.sum();
    }
  } else {
    for (Index c = 0; c < out.cols(); ++c) {
      auto col = out.col(c);
      col.array() -= col.maxCoeff();
      col = col.unaryExpr([](Scalar v) { return std::exp(v); });
      col /= col.sum();
    }
  }
  return a.tape().record(
      "softmax", std::move(out), {a},
      [a, axis](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(a.id())) return;
        const auto& y = t.value(self);
        const auto& g = t.grad(self);
        Matrix<Scalar> gy = g.cwiseProduct(y);
        if (axis == 1) {
          Matrix<Scalar> dots = gy.rowwise().sum();
          t.grad(a.id()) += gy - (y.array().colwise() * dots.col(0).array())
                                     .matrix();
        } else {
          Matrix<Scalar> dots = gy.colwise().sum();
          t.grad(a.id()) += gy - (y.array().rowwise() * dots.row(0).array())
                                     .matrix();
        }
      });
}

template <typename Scalar>
Var<Scalar> mask_logits(Var<Scalar> a, std::span<const bool> keep, int axis) {
  check_axis("mask_logits", axis);
  const Index extent = axis == 0 ? a.rows() : a.cols();
  if (static_cast<Index>(keep.size()) != extent) {
    throw DimensionError("mask_logits: mask length " +
                         std::to_string(keep.size()) + " does not match " +
                         shape_string(a.value()) + " along axis " +
                         std::to_string(axis));
  }
  Matrix<Scalar> out = a.value();
  const auto offset = static_cast<Scalar>(kMaskedLogit);
  for (Index i = 0; i < extent; ++i) {
    if (keep[static_cast<std::size_t>(i)]) continue;
    if (axis == 0) {
      out.row(i).array() += offset;
    } else {
      out.col(i).array() += offset;
    }
  }
  return a.tape().record("mask_logits", std::move(out), {a},
                         [a](Tape<Scalar>& t, std::size_t self) {
                           accumulate(t, a, t.grad(self));
                         });
}

template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().middleRows(begin, count);
  return a.tape().record(
      "slice_rows", std::move(out), {a},
      [a, begin, count](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(a.id())) return;
        t.grad(a.id()).middleRows(begin, count) += t.grad(self);
      });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Index begin, Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw DimensionError("slice_cols: cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " +
                         shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().middleCols(begin, count);
  return a.tape().record(
      "slice_cols", std::move(out), {a},
      [a, begin, count](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(a.id())) return;
        t.grad(a.id()).middleCols(begin, count) += t.grad(self);
      });
}

namespace {

// The tape's record() takes an initializer_list of inputs for the
// requires-grad scan; concatenation has a runtime-sized input list, so it
// seeds the scan through a synthetic constant instead.
template <typename Scalar>
Var<Scalar> record_multi(const char* op, Matrix<Scalar> out,
                         std::vector<Var<Scalar>> parts,
                         typename Tape<Scalar>::BackwardFn fn) {
  auto& tape = parts.front().tape();
  Var<Scalar> any_grad = parts.front();
  for (const auto& p : parts) {
    if (p.requires_grad()) {
      any_grad = p;
      break;
    }
  }
  return tape.record(op, std::move(out), {any_grad}, std::move(fn));
}

}  // namespace

template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_string(parts.front().value()) + " vs " +
                           shape_string(p.value()));
    }
    rows += p.rows();
  }
  Matrix<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var<Scalar>> inputs(parts.begin(), parts.end());
  return record_multi<Scalar>(
      "concat_rows", std::move(out), inputs,
      [inputs](Tape<Scalar>& t, std::size_t self) {
        const auto& g = t.grad(self);
        Index offset = 0;
        for (const auto& p : inputs) {
          const Index n = p.rows();
          if (t.requires_grad(p.id())) {
            t.grad(p.id()) += g.middleRows(offset, n);
          }
          offset += n;
        }
      });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(parts.front().value()) + " vs " +
                           shape_string(p.value()));
    }
    cols += p.cols();
  }
  Matrix<Scalar> out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var<Scalar>> inputs(parts.begin(), parts.end());
  return record_multi<Scalar>(
      "concat_cols", std::move(out), inputs,
      [inputs](Tape<Scalar>& t, std::size_t self) {
        const auto& g = t.grad(self);
        Index offset = 0;
        for (const auto& p : inputs) {
          const Index n = p.cols();
          if (t.requires_grad(p.id())) {
            t.grad(p.id()) += g.middleCols(offset, n);
          }
          offset += n;
        }
      });
}

template <typename Scalar>
Var<Scalar> embedding_lookup(Var<Scalar> table, std::span<const int> ids) {
  const auto& tab = table.value();
  Matrix<Scalar> out(static_cast<Index>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= tab.rows()) {
      throw DimensionError("embedding_lookup: id " + std::to_string(id) +
                           " at position " + std::to_string(i) +
                           " outside table of " + std::to_string(tab.rows()) +
                           " rows");
    }
    out.row(static_cast<Index>(i)) = tab.row(id);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return table.tape().record(
      "embedding_lookup", std::move(out), {table},
      [table, saved = std::move(saved)](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(table.id())) return;
        const auto& g = t.grad(self);
        auto& gt = t.grad(table.id());
        for (std::size_t i = 0; i < saved.size(); ++i) {
          gt.row(saved[i]) += g.row(static_cast<Index>(i));
        }
      });
}

template <typename Scalar>
Var<Scalar> conv1d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias,
                   int kernel, Padding padding) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (n == 0) throw DimensionError("conv1d: empty input sequence");
  if (kernel < 1) throw ConfigError("conv1d: kernel must be >= 1");
  if (weight.rows() != kernel * d) {
    throw DimensionError("conv1d: weight " + shape_string(weight.value()) +
                         " does not match kernel " + std::to_string(kernel) +
                         " over input " + shape_string(x.value()));
  }
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw DimensionError("conv1d: bias " + shape_string(bias.value()) +
                         " does not match weight " +
                         shape_string(weight.value()));
  }
  Index pad_left = 0;
  Index out_len = 0;
  if (padding == Padding::Same) {
    pad_left = (kernel - 1) / 2;
    out_len = n;
  } else {
    if (kernel > n) {
      throw DimensionError("conv1d: kernel " + std::to_string(kernel) +
                           " longer than sequence " + std::to_string(n) +
                           " with valid padding");
    }
    out_len = n - kernel + 1;
  }

  // im2col: unfolded(t, tap*d + c) = x(t + tap - pad_left, c), zero outside.
  Matrix<Scalar> unfolded = Matrix<Scalar>::Zero(out_len, kernel * d);
  const auto& xv = x.value();
  for (Index t = 0; t < out_len; ++t) {
    for (Index tap = 0; tap < kernel; ++tap) {
      const Index src = t + tap - pad_left;
      if (src < 0 || src >= n) continue;
      unfolded.block(t, tap * d, 1, d) = xv.row(src);
    }
  }
  Matrix<Scalar> out = unfolded * weight.value();
  out.rowwise() += bias.value().row(0);
  return x.tape().record(
      "conv1d", std::move(out), {x, weight, bias},
      [x, weight, bias, kernel, pad_left, unfolded = std::move(unfolded)](
          Tape<Scalar>& t, std::size_t self) {
        const auto& g = t.grad(self);
        accumulate(t, weight, unfolded.transpose() * g);
        accumulate(t, bias, g.colwise().sum());
        if (!t.requires_grad(x.id())) return;
        const Index d = x.cols();
        const Index n = x.rows();
        Matrix<Scalar> gu = g * weight.value().transpose();
        auto& gx = t.grad(x.id());
        for (Index r = 0; r < gu.rows(); ++r) {
          for (Index tap = 0; tap < kernel; ++tap) {
            const Index src = r + tap - pad_left;
            if (src < 0 || src >= n) continue;
            gx.row(src) += gu.block(r, tap * d, 1, d);
          }
        }
      });
}

template <typename Scalar>
Var<Scalar> max_pool_over_time(Var<Scalar> x) {
  const auto& xv = x.value();
  if (xv.rows() == 0) throw DimensionError("max_pool_over_time: empty input");
  Matrix<Scalar> out(1, xv.cols());
  std::vector<Index> argmax(static_cast<std::size_t>(xv.cols()), 0);
  for (Index c = 0; c < xv.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < xv.rows(); ++r) {
      if (xv(r, c) > xv(best, c)) best = r;
    }
    argmax[static_cast<std::size_t>(c)] = best;
    out(0, c) = xv(best, c);
  }
  return x.tape().record(
      "max_pool_over_time", std::move(out), {x},
      [x, argmax = std::move(argmax)](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(x.id())) return;
        const auto& g = t.grad(self);
        auto& gx = t.grad(x.id());
        for (std::size_t c = 0; c < argmax.size(); ++c) {
          gx(argmax[c], static_cast<Index>(c)) += g(0, static_cast<Index>(c));
        }
      });
}

template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> x, Var<Scalar> gain, Var<Scalar> bias,
                       Scalar eps) {
  const Index h = x.cols();
  if (h < 1) throw DimensionError("layer_norm: empty rows");
  if (gain.rows() != 1 || gain.cols() != h || bias.rows() != 1 ||
      bias.cols() != h) {
    throw DimensionError("layer_norm: gain/bias " +
                         shape_string(gain.value()) + "/" +
                         shape_string(bias.value()) + " vs input " +
                         shape_string(x.value()));
  }
  const auto& xv = x.value();
  Matrix<Scalar> normed(xv.rows(), h);
  Matrix<Scalar> inv_std(xv.rows(), 1);
  for (Index r = 0; r < xv.rows(); ++r) {
    const Scalar mean = xv.row(r).mean();
    const auto centered = (xv.row(r).array() - mean).eval();
    const Scalar var = centered.square().mean();
    inv_std(r, 0) = Scalar(1) / std::sqrt(var + eps);
    normed.row(r) = (centered * inv_std(r, 0)).matrix();
  }
  Matrix<Scalar> out =
      (normed.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return x.tape().record(
      "layer_norm", std::move(out), {x, gain, bias},
      [x, gain, bias, normed = std::move(normed),
       inv_std = std::move(inv_std)](Tape<Scalar>& t, std::size_t self) {
        const auto& g = t.grad(self);
        accumulate(t, gain, g.cwiseProduct(normed).colwise().sum());
        accumulate(t, bias, g.colwise().sum());
        if (!t.requires_grad(x.id())) return;
        const auto h = static_cast<Scalar>(normed.cols());
        Matrix<Scalar> gn =
            (g.array().rowwise() * gain.value().row(0).array()).matrix();
        auto& gx = t.grad(x.id());
        for (Index r = 0; r < gn.rows(); ++r) {
          const Scalar mean_g = gn.row(r).sum() / h;
          const Scalar mean_gx = gn.row(r).dot(normed.row(r)) / h;
          gx.row(r).array() += inv_std(r, 0) *
                               (gn.row(r).array() - mean_g -
                                normed.row(r).array() * mean_gx);
        }
      });
}

template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, double prob) {
  auto& tape = x.tape();
  if (!tape.training() || prob <= 0.0) return x;
  if (prob >= 1.0) throw ConfigError("dropout: probability must be < 1");
  std::bernoulli_distribution keep(1.0 - prob);
  const Scalar kept = static_cast<Scalar>(1.0 / (1.0 - prob));
  Matrix<Scalar> mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(tape.rng()) ? kept : Scalar(0);
  }
  Matrix<Scalar> out = x.value().cwiseProduct(mask);
  return tape.record("dropout", std::move(out), {x},
                     [x, mask = std::move(mask)](Tape<Scalar>& t,
                                                 std::size_t self) {
                       accumulate(t, x, t.grad(self).cwiseProduct(mask));
                     });
}

template <typename Scalar>
Var<Scalar> bce_loss(Var<Scalar> probs, std::span<const Scalar> targets,
                     Scalar eps) {
  if (probs.rows() != 1 ||
      probs.cols() != static_cast<Index>(targets.size())) {
    throw DimensionError("bce_loss: predictions " +
                         shape_string(probs.value()) + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  const auto& p = probs.value();
  Scalar total = 0;
  for (Index i = 0; i < p.cols(); ++i) {
    const Scalar q = std::clamp(p(0, i), eps, Scalar(1) - eps);
    const Scalar y = targets[static_cast<std::size_t>(i)];
    total += -y * std::log(q) - (Scalar(1) - y) * std::log(Scalar(1) - q);
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total;
  std::vector<Scalar> y(targets.begin(), targets.end());
  return probs.tape().record(
      "bce_loss", std::move(out), {probs},
      [probs, eps, y = std::move(y)](Tape<Scalar>& t, std::size_t self) {
        if (!t.requires_grad(probs.id())) return;
        const Scalar g = t.grad(self)(0, 0);
        const auto& p = probs.value();
        auto& gp = t.grad(probs.id());
        for (Index i = 0; i < p.cols(); ++i) {
          const Scalar q = p(0, i);
          if (q < eps || q > Scalar(1) - eps) continue;
          const Scalar yi = y[static_cast<std::size_t>(i)];
          gp(0, i) += g * (-yi / q + (Scalar(1) - yi) / (Scalar(1) - q));
        }
      });
}

template <typename Scalar>
AttentionResult<Scalar> multi_head_attention(
    Var<Scalar> queries, Var<Scalar> keys, Var<Scalar> values,
    const AttentionWeights<Scalar>& w, int heads,
    std::span<const bool> key_mask) {
  const Index hidden = w.wq.cols();
  if (heads < 1 || hidden % heads != 0) {
    throw ConfigError("multi_head_attention: hidden size " +
                      std::to_string(hidden) + " not divisible into " +
                      std::to_string(heads) + " heads");
  }
  if (keys.rows() != values.rows()) {
    throw DimensionError("multi_head_attention: keys " +
                         shape_string(keys.value()) + " vs values " +
                         shape_string(values.value()));
  }
  if (!key_mask.empty()) {
    if (static_cast<Index>(key_mask.size()) != keys.rows()) {
      throw DimensionError("multi_head_attention: mask length " +
                           std::to_string(key_mask.size()) + " vs " +
                           std::to_string(keys.rows()) + " keys");
    }
    if (std::none_of(key_mask.begin(), key_mask.end(),
                     [](bool k) { return k; })) {
      throw DimensionError("multi_head_attention: every key is masked");
    }
  }
  const Index head_dim = hidden / heads;
  const Scalar inv_scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim));

  Var<Scalar> q = add_row(matmul(queries, w.wq), w.bq);
  Var<Scalar> k = add_row(matmul(keys, w.wk), w.bk);
  Var<Scalar> v = add_row(matmul(values, w.wv), w.bv);

  AttentionResult<Scalar> result;
  std::vector<Var<Scalar>> per_head;
  per_head.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Index begin = h * head_dim;
    Var<Scalar> qh = slice_cols(q, begin, head_dim);
    Var<Scalar> kh = slice_cols(k, begin, head_dim);
    Var<Scalar> vh = slice_cols(v, begin, head_dim);
    Var<Scalar> scores = scale(matmul(qh, transpose(kh)), inv_scale);
    if (!key_mask.empty()) scores = mask_logits(scores, key_mask, 1);
    Var<Scalar> attn = softmax(scores, 1);
    result.weights.push_back(attn.value());
    per_head.push_back(matmul(attn, vh));
  }
  Var<Scalar> merged = concat_cols<Scalar>(per_head);
  result.output = add_row(matmul(merged, w.wo), w.bo);
  return result;
}

#define MEDCODE_INSTANTIATE_OPS(S)                                           \
  template Var<S> matmul(Var<S>, Var<S>);                                    \
  template Var<S> transpose(Var<S>);                                         \
  template Var<S> add(Var<S>, Var<S>);                                       \
  template Var<S> sub(Var<S>, Var<S>);                                       \
  template Var<S> hadamard(Var<S>, Var<S>);                                  \
  template Var<S> scale(Var<S>, S);                                          \
  template Var<S> add_row(Var<S>, Var<S>);                                   \
  template Var<S> sum(Var<S>);                                               \
  template Var<S> sum_axis(Var<S>, int);                                     \
  template Var<S> mean_rows(Var<S>);                                         \
  template Var<S> sigmoid(Var<S>);                                           \
  template Var<S> tanh(Var<S>);                                              \
  template Var<S> relu(Var<S>);                                              \
  template Var<S> gelu(Var<S>);                                              \
  template Var<S> softmax(Var<S>, int);                                      \
  template Var<S> mask_logits(Var<S>, std::span<const bool>, int);           \
  template Var<S> slice_rows(Var<S>, Index, Index);                          \
  template Var<S> slice_cols(Var<S>, Index, Index);                          \
  template Var<S> concat_rows(std::span<const Var<S>>);                      \
  template Var<S> concat_cols(std::span<const Var<S>>);                      \
  template Var<S> embedding_lookup(Var<S>, std::span<const int>);            \
  template Var<S> conv1d(Var<S>, Var<S>, Var<S>, int, Padding);              \
  template Var<S> max_pool_over_time(Var<S>);                                \
  template Var<S> layer_norm(Var<S>, Var<S>, Var<S>, S);                     \
  template Var<S> dropout(Var<S>, double);                                   \
  template Var<S> bce_loss(Var<S>, std::span<const S>, S);                   \
  template AttentionResult<S> multi_head_attention(                          \
      Var<S>, Var<S>, Var<S>, const AttentionWeights<S>&, int,               \
      std::span<const bool>);

MEDCODE_INSTANTIATE_OPS(float)
MEDCODE_INSTANTIATE_OPS(double)

#undef MEDCODE_INSTANTIATE_OPS

}  // namespace medcode
