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

// Differentiable operations on tape variables. All functions record onto the
// tape that owns their first operand.

#include <span>
#include <vector>

#include "medcode/tensor.hpp"

namespace medcode {

/// Additive offset for masked logits ahead of a softmax.
inline constexpr double kMaskedLogit = -1e9;

enum class Padding { Same, Valid };

// Linear algebra and elementwise arithmetic.
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b);
template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a);
template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b);
template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b);
template <typename Scalar>
Var<Scalar> hadamard(Var<Scalar> a, Var<Scalar> b);
template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar factor);
/// a [r x c] + row [1 x c] broadcast down the rows.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> row);

// Reductions.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a);
/// axis 0 collapses rows (-> 1 x c); axis 1 collapses columns (-> r x 1).
template <typename Scalar>
Var<Scalar> sum_axis(Var<Scalar> a, int axis);
template <typename Scalar>
Var<Scalar> mean_rows(Var<Scalar> a);

// Activations.
template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a);
template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a);
template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a);
/// Exact (erf) GELU.
template <typename Scalar>
Var<Scalar> gelu(Var<Scalar> a);

/// Max-subtracted softmax. axis 0 normalises each column, axis 1 each row.
template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> a, int axis);

/// Adds kMaskedLogit to excluded positions. keep.size() must match the
/// extent of the masked axis: axis 0 masks rows, axis 1 masks columns.
template <typename Scalar>
Var<Scalar> mask_logits(Var<Scalar> a, std::span<const bool> keep, int axis);

// Structural.
template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> a, Index begin, Index count);
template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Index begin, Index count);
template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts);
template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts);

/// Gathers rows of table. Frozen tables receive no gradient.
template <typename Scalar>
Var<Scalar> embedding_lookup(Var<Scalar> table, std::span<const int> ids);

/// 1-D convolution over the token axis.
/// x: [n x d], weight: [(kernel*d) x f] with row index tap*d + channel,
/// bias: [1 x f]. Same padding puts (kernel-1)/2 zeros before and the rest
/// after the sequence.
template <typename Scalar>
Var<Scalar> conv1d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias,
                   int kernel, Padding padding);

/// Per-column max over rows -> [1 x f]. Ties route gradient to the lowest
/// row index.
template <typename Scalar>
Var<Scalar> max_pool_over_time(Var<Scalar> x);

/// Row-wise normalisation followed by gain/bias ([1 x h] each).
template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> x, Var<Scalar> gain, Var<Scalar> bias,
                       Scalar eps = Scalar(1e-12));

/// Inverted dropout; identity unless the tape is in training mode.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, double prob);

/// Multi-label binary cross entropy summed over labels. Predictions are
/// clamped to [eps, 1 - eps]; clamped entries pass no gradient.
template <typename Scalar>
Var<Scalar> bce_loss(Var<Scalar> probs, std::span<const Scalar> targets,
                     Scalar eps = Scalar(1e-7));

template <typename Scalar>
struct AttentionWeights {
  Var<Scalar> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename Scalar>
struct AttentionResult {
  Var<Scalar> output;
  /// Per head [queries x keys]; every row sums to one.
  std::vector<Matrix<Scalar>> weights;
};

/// Scaled dot-product attention split over heads, concatenated and projected
/// by wo/bo. key_mask (empty = all keys visible) excludes keys by additive
/// masking.
template <typename Scalar>
AttentionResult<Scalar> multi_head_attention(
    Var<Scalar> queries, Var<Scalar> keys, Var<Scalar> values,
    const AttentionWeights<Scalar>& w, int heads,
    std::span<const bool> key_mask = {});

}  // namespace medcode
